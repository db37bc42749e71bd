#include "docgcn/corpus.hpp"
#include "docgcn/encoding.hpp"
#include "docgcn/eval.hpp"
#include "docgcn/fusion.hpp"
#include "docgcn/geometry.hpp"
#include "docgcn/graphs.hpp"
#include "docgcn/pipeline.hpp"
#include "docgcn/synthetic.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace docgcn;
using nlohmann::json;

namespace {

// Pages cross the boundary as canonical JSON text; the Python side parses it.
corpus::Page page_from_text(const std::string& text) { return corpus::page_from_json(json::parse(text), 1); }

std::vector<std::string> pages_to_text(const std::vector<corpus::Page>& pages) {
    std::vector<std::string> out;
    for (const auto& p : pages) out.push_back(corpus::page_to_json(p).dump());
    return out;
}

std::vector<corpus::Page> pages_from_text(const std::vector<std::string>& texts) {
    std::vector<corpus::Page> out;
    std::size_t line = 0;
    for (const auto& t : texts) out.push_back(corpus::page_from_json(json::parse(t), ++line));
    return out;
}

}  // namespace

PYBIND11_MODULE(_docgcn, m) {
    m.doc() = "Multi-aspect GCN document layout analysis";

    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def("ingest_canonical", [](const std::string& path) { return pages_to_text(corpus::ingest_canonical(path)); },
          py::arg("path"));
    m.def("generate_synthetic",
          [](std::size_t pages, std::uint64_t seed, double corruption) {
              synthetic::SyntheticConfig cfg;
              cfg.pages = pages;
              cfg.seed = seed;
              cfg.corruption = corruption;
              return pages_to_text(synthetic::generate(cfg));
          },
          py::arg("pages"), py::arg("seed"), py::arg("corruption") = 0.5);

    m.def("density_ratio",
          [](std::int64_t chars, double x1, double y1, double x2, double y2) {
              corpus::Segment s;
              s.char_count = chars;
              s.bbox = {x1, y1, x2, y2};
              return geometry::density_ratio(s);
          },
          py::arg("char_count"), py::arg("x1"), py::arg("y1"), py::arg("x2"), py::arg("y2"));
    m.def("nearest_two_edges",
          [](const std::string& page) {
              std::vector<std::tuple<std::size_t, std::size_t, double>> out;
              for (const auto& e : geometry::nearest_two_edges(page_from_text(page))) out.emplace_back(e.src, e.dst, e.weight);
              return out;
          },
          py::arg("page_json"));
    m.def("normalize_adjacency", &graphs::normalize_adjacency, py::arg("adjacency"));
    m.def("sinusoidal_encode", &encoding::sinusoidal_encode, py::arg("t"), py::arg("dim") = encoding::kEmbeddingDim);
    m.def("pool",
          [](const Matrix& a, const Matrix& b, const std::string& mode) {
              return fusion::pool(a, b, fusion::pooling_mode_from_string(mode));
          },
          py::arg("a"), py::arg("b"), py::arg("mode") = "max");
    m.def("score",
          [](const std::vector<int>& pred, const std::vector<int>& gold, const std::vector<std::string>& labels) {
              return eval::score_labels(pred, gold, corpus::LabelSet(labels)).to_json().dump();
          },
          py::arg("predicted"), py::arg("gold"), py::arg("labels"));

    m.def("train",
          [](const std::vector<std::string>& pages_json, const std::string& model_dir, std::uint64_t seed,
             int pretrain_epochs, int classifier_epochs, int hidden) {
              const auto pages = pages_from_text(pages_json);
              pipeline::TrainOptions opts;
              opts.pretrain.seed = seed;
              opts.pretrain.epochs = pretrain_epochs;
              opts.pretrain.hidden = hidden;
              opts.classifier.seed = seed;
              opts.classifier.epochs = classifier_epochs;
              corpus::FeatureConfig features;
              features.seed = seed;
              const auto labels = corpus::LabelSet::from_pages(pages);
              py::gil_scoped_release release;
              const auto bundle = pipeline::train_pipeline(pages, labels, features, opts);
              for (const auto& g : bundle.gcns) pipeline::save_gcn(model_dir, *g, bundle);
              pipeline::save_classifier(model_dir, *bundle.classifier, bundle);
          },
          py::arg("pages"), py::arg("model_dir"), py::arg("seed"), py::arg("pretrain_epochs") = 10,
          py::arg("classifier_epochs") = fusion::ClassifierTrainConfig{}.epochs, py::arg("hidden") = 256);
    m.def("predict",
          [](const std::vector<std::string>& pages_json, const std::string& model_dir) {
              const auto pages = pages_from_text(pages_json);
              const auto bundle = pipeline::load_bundle(model_dir, true);
              std::vector<std::string> out;
              for (const auto& page : pages)
                  out.push_back(pipeline::prediction_to_json(pipeline::predict_page(page, bundle), bundle.labels).dump());
              return out;
          },
          py::arg("pages"), py::arg("model_dir"));
}
