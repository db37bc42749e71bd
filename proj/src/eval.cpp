#include "docgcn/eval.hpp"

#include <fmt/format.h>

#include <map>
#include <sstream>
#include <utility>

namespace docgcn::eval {

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

ClassReport score_labels(const std::vector<int>& predicted, const std::vector<int>& gold,
                         const corpus::LabelSet& labels) {
    require(predicted.size() == gold.size(), "score_labels: length mismatch");
    const auto c = labels.size();
    std::vector<std::size_t> tp(c, 0), pred_count(c, 0), gold_count(c, 0);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const int p = predicted[i], g = gold[i];
        require(p >= 0 && static_cast<std::size_t>(p) < c && g >= 0 && static_cast<std::size_t>(g) < c,
                "score_labels: label id out of range");
        ++pred_count[static_cast<std::size_t>(p)];
        ++gold_count[static_cast<std::size_t>(g)];
        if (p == g) ++tp[static_cast<std::size_t>(p)];
    }

    ClassReport r;
    r.total = gold.size();
    std::size_t tp_all = 0;
    for (std::size_t k = 0; k < c; ++k) {
        ClassMetrics m;
        m.name = labels.names()[k];
        m.precision = ratio(tp[k], pred_count[k]);
        m.recall = ratio(tp[k], gold_count[k]);
        m.f1 = harmonic(m.precision, m.recall);
        m.support = gold_count[k];
        tp_all += tp[k];
        r.macro.precision += m.precision / static_cast<double>(c);
        r.macro.recall += m.recall / static_cast<double>(c);
        r.macro.f1 += m.f1 / static_cast<double>(c);
        const double w = ratio(m.support, r.total);
        r.weighted.precision += w * m.precision;
        r.weighted.recall += w * m.recall;
        r.weighted.f1 += w * m.f1;
        r.classes.push_back(std::move(m));
    }
    // Every segment gets exactly one prediction, so FP and FN totals both equal
    // the number of errors and the three micro scores coincide.
    r.micro.precision = ratio(tp_all, r.total);
    r.micro.recall = r.micro.precision;
    r.micro.f1 = r.micro.precision;
    return r;
}

ClassReport score(const std::vector<LabeledSegment>& predictions, const std::vector<LabeledSegment>& gold,
                  const corpus::LabelSet& labels) {
    using Key = std::pair<std::string, std::string>;
    std::map<Key, std::string> pred;
    for (const auto& p : predictions) {
        if (!pred.emplace(Key{p.page_id, p.segment_id}, p.label).second)
            throw DataError("duplicate prediction for " + p.page_id + "/" + p.segment_id);
    }
    std::vector<std::string> missing, extra;
    std::vector<int> pv, gv;
    std::map<Key, bool> seen;
    for (const auto& g : gold) {
        const Key key{g.page_id, g.segment_id};
        seen[key] = true;
        auto it = pred.find(key);
        if (it == pred.end()) {
            missing.push_back(g.page_id + "/" + g.segment_id);
            continue;
        }
        gv.push_back(labels.index(g.label));
        pv.push_back(labels.index(it->second));
    }
    for (const auto& [key, label] : pred)
        if (!seen.count(key)) extra.push_back(key.first + "/" + key.second);

    if (!missing.empty() || !extra.empty()) {
        auto list = [](const std::vector<std::string>& ids) {
            std::string s;
            const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
            for (std::size_t i = 0; i < shown; ++i) s += (i ? ", " : "") + ids[i];
            if (ids.size() > shown) s += fmt::format(", ... ({} total)", ids.size());
            return s;
        };
        std::string msg = "prediction and gold segment ids differ";
        if (!missing.empty()) msg += "; missing: " + list(missing);
        if (!extra.empty()) msg += "; extra: " + list(extra);
        throw DataError(msg);
    }
    return score_labels(pv, gv, labels);
}

std::vector<LabeledSegment> gold_segments(const std::vector<corpus::Page>& pages) {
    std::vector<LabeledSegment> out;
    for (const auto& page : pages)
        for (const auto& s : page.segments) {
            if (s.label.empty()) throw DataError("page " + page.page_id + ": segment " + s.id + " has no label");
            out.push_back({page.page_id, s.id, s.label});
        }
    return out;
}

nlohmann::json ClassReport::to_json() const {
    auto agg = [](const Aggregate& a) {
        return nlohmann::json{{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}};
    };
    nlohmann::json cls = nlohmann::json::array();
    for (const auto& m : classes)
        cls.push_back({{"label", m.name},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"support", m.support}});
    return {{"classes", cls}, {"micro", agg(micro)}, {"macro", agg(macro)}, {"weighted", agg(weighted)},
            {"total", total}};
}

std::string ClassReport::to_table() const {
    std::size_t width = 8;
    for (const auto& m : classes) width = std::max(width, m.name.size());
    std::ostringstream os;
    os << fmt::format("{:<{}}  {:>9}  {:>9}  {:>9}  {:>7}\n", "label", width, "precision", "recall", "f1", "support");
    for (const auto& m : classes)
        os << fmt::format("{:<{}}  {:>9.4f}  {:>9.4f}  {:>9.4f}  {:>7}\n", m.name, width, m.precision, m.recall, m.f1,
                          m.support);
    auto row = [&](const char* name, const Aggregate& a) {
        os << fmt::format("{:<{}}  {:>9.4f}  {:>9.4f}  {:>9.4f}  {:>7}\n", name, width, a.precision, a.recall, a.f1,
                          total);
    };
    row("micro", micro);
    row("macro", macro);
    row("weighted", weighted);
    return os.str();
}

ClassReport train_and_score(const std::vector<fusion::PageFeatures>& train, const std::vector<fusion::PageFeatures>& test,
                            const fusion::FusionConfig& fcfg, const fusion::ClassifierTrainConfig& tcfg,
                            const corpus::LabelSet& labels) {
    auto clf = fusion::FusionClassifier::create(fcfg, tcfg.seed);
    clf = fusion::train_classifier(train, std::move(clf), tcfg).classifier;
    std::vector<int> pred, gold;
    for (const auto& page : test) {
        require(!page.labels.empty(), "train_and_score: test page without labels");
        const auto ids = fusion::argmax_rows(fusion::classify(fusion::fuse(page, clf), clf, false));
        pred.insert(pred.end(), ids.begin(), ids.end());
        gold.insert(gold.end(), page.labels.begin(), page.labels.end());
    }
    return score_labels(pred, gold, labels);
}

ClassReport ablate_aspects(const std::vector<fusion::PageFeatures>& train,
                           const std::vector<fusion::PageFeatures>& test, const std::vector<fusion::Aspect>& aspects,
                           fusion::FusionConfig fcfg, const fusion::ClassifierTrainConfig& tcfg,
                           const corpus::LabelSet& labels) {
    if (aspects.empty()) throw ContractViolation("ablate_aspects: aspect subset must be nonempty");
    fcfg.aspects = fusion::canonical_aspects(aspects);
    return train_and_score(train, test, fcfg, tcfg, labels);
}

std::vector<std::vector<fusion::Aspect>> aspect_subsets() {
    std::vector<std::vector<fusion::Aspect>> out;
    const auto& all = fusion::kAllAspects;
    for (std::size_t size = 1; size <= all.size(); ++size)
        for (unsigned mask = 1; mask < (1u << all.size()); ++mask) {
            if (static_cast<std::size_t>(__builtin_popcount(mask)) != size) continue;
            std::vector<fusion::Aspect> subset;
            for (std::size_t k = 0; k < all.size(); ++k)
                if (mask & (1u << k)) subset.push_back(all[k]);
            out.push_back(std::move(subset));
        }
    return out;
}

std::string aspects_name(const std::vector<fusion::Aspect>& aspects) {
    std::string s;
    for (const auto a : aspects) s += (s.empty() ? "" : "+") + fusion::to_string(a);
    return s;
}

std::array<ClassReport, 3> compare_pooling(const std::vector<fusion::PageFeatures>& train,
                                           const std::vector<fusion::PageFeatures>& test, fusion::FusionConfig fcfg,
                                           const fusion::ClassifierTrainConfig& tcfg, const corpus::LabelSet& labels) {
    std::array<ClassReport, 3> out;
    const std::array modes{fusion::PoolingMode::min, fusion::PoolingMode::avg, fusion::PoolingMode::max};
    for (std::size_t k = 0; k < modes.size(); ++k) {
        fcfg.pooling = modes[k];
        out[k] = train_and_score(train, test, fcfg, tcfg, labels);
    }
    return out;
}

}  // namespace docgcn::eval
