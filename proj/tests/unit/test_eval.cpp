#include "docgcn/eval.hpp"
#include "support.hpp"

#include <doctest.h>

#include <string>

using namespace docgcn;
using namespace docgcn::eval;
using namespace testing_support;

TEST_CASE("perfect predictions score 1") {
    const corpus::LabelSet labels({"a", "b", "c"});
    const std::vector<int> y{0, 1, 2, 2, 1};
    const auto r = score_labels(y, y, labels);
    CHECK(r.micro.f1 == 1.0);
    CHECK(r.macro.f1 == 1.0);
    CHECK(r.weighted.f1 == 1.0);
    for (const auto& c : r.classes) CHECK(c.f1 == 1.0);
}

TEST_CASE("binary example: TP 2, FP 1, FN 1") {
    const corpus::LabelSet labels({"neg", "pos"});
    // pos: predicted at 0, 1, 2 (2 correct), gold pos at 0, 1, 3.
    const std::vector<int> pred{1, 1, 1, 0, 0};
    const std::vector<int> gold{1, 1, 0, 1, 0};
    const auto r = score_labels(pred, gold, labels);
    CHECK(r.classes[1].precision == doctest::Approx(2.0 / 3));
    CHECK(r.classes[1].recall == doctest::Approx(2.0 / 3));
    CHECK(r.classes[1].f1 == doctest::Approx(2.0 / 3));
    CHECK(r.classes[1].support == 3);
    CHECK(r.micro.f1 == doctest::Approx(3.0 / 5));
}

TEST_CASE("class with no predictions scores zero rather than dividing by zero") {
    const corpus::LabelSet labels({"a", "b"});
    const auto r = score_labels({0, 0}, {0, 1}, labels);
    CHECK(r.classes[1].precision == 0.0);
    CHECK(r.classes[1].f1 == 0.0);
}

TEST_CASE("scores match a counting oracle") {
    Rng rng(1);
    for (int trial = 0; trial < 300; ++trial) {
        const auto c = 2 + rng.index(5);
        std::vector<std::string> names;
        for (std::size_t k = 0; k < c; ++k) names.push_back("L" + std::to_string(k));
        const corpus::LabelSet labels(names);
        const auto n = 1 + rng.index(40);
        std::vector<int> pred(n), gold(n);
        for (std::size_t i = 0; i < n; ++i) {
            gold[i] = static_cast<int>(rng.index(c));
            pred[i] = rng.uniform() < 0.6 ? gold[i] : static_cast<int>(rng.index(c));
        }
        const auto r = score_labels(pred, gold, labels);
        double macro = 0, weighted = 0;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < n; ++i) correct += pred[i] == gold[i];
        for (std::size_t k = 0; k < c; ++k) {
            double tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const bool p = pred[i] == static_cast<int>(k), g = gold[i] == static_cast<int>(k);
                tp += p && g;
                fp += p && !g;
                fn += !p && g;
            }
            const double f1 = tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
            CHECK(r.classes[k].f1 == doctest::Approx(f1).epsilon(1e-12));
            macro += f1 / static_cast<double>(c);
            weighted += f1 * (tp + fn) / static_cast<double>(n);
        }
        CHECK(r.macro.f1 == doctest::Approx(macro).epsilon(1e-12));
        CHECK(r.weighted.f1 == doctest::Approx(weighted).epsilon(1e-12));
        const double acc = static_cast<double>(correct) / static_cast<double>(n);
        CHECK(r.micro.precision == doctest::Approx(acc));
        CHECK(r.micro.recall == doctest::Approx(acc));
        CHECK(r.micro.f1 == doctest::Approx(acc));
    }
}

TEST_CASE("score matches by page and segment id") {
    const corpus::LabelSet labels({"a", "b"});
    const std::vector<LabeledSegment> gold{{"p1", "s0", "a"}, {"p1", "s1", "b"}, {"p2", "s0", "b"}};
    const std::vector<LabeledSegment> shuffled{{"p2", "s0", "b"}, {"p1", "s1", "b"}, {"p1", "s0", "a"}};
    CHECK(score(shuffled, gold, labels).micro.f1 == 1.0);

    const std::vector<LabeledSegment> bad{{"p1", "s0", "a"}, {"p1", "s9", "b"}};
    try {
        score(bad, gold, labels);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("missing: p1/s1, p2/s0") != std::string::npos);
        CHECK(msg.find("extra: p1/s9") != std::string::npos);
    }
    const std::vector<LabeledSegment> unknown{{"p1", "s0", "zzz"}, {"p1", "s1", "b"}, {"p2", "s0", "b"}};
    CHECK_THROWS_AS(score(unknown, gold, labels), DataError);
    auto dup = gold;
    dup.push_back(gold[0]);
    CHECK_THROWS_AS(score(dup, gold, labels), DataError);
}

TEST_CASE("aspect subsets") {
    const auto subsets = aspect_subsets();
    CHECK(subsets.size() == 15);
    for (std::size_t i = 0; i < 4; ++i) CHECK(subsets[i].size() == 1);
    CHECK(subsets.back().size() == 4);
    CHECK(aspects_name(fusion::kAllAspects) == "syn+sem+dens+appr");
}

TEST_CASE("report serialisation") {
    const corpus::LabelSet labels({"a", "b"});
    const auto r = score_labels({0, 1, 1}, {0, 1, 0}, labels);
    const auto j = r.to_json();
    CHECK(j["classes"].size() == 2);
    CHECK(j["total"] == 3);
    CHECK(j["micro"]["f1"].get<double>() == doctest::Approx(2.0 / 3));
    CHECK(r.to_table().find("macro") != std::string::npos);
}
