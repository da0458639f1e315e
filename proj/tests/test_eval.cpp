#include <doctest.h>

#include <fstream>

#include "bubble/errors.hpp"
#include "bubble/eval.hpp"
#include "support.hpp"

using namespace bubble;

namespace {

// Four sections; "alpha" queries concentrate tf in section S whose chunks are
// near-duplicates, so un-gated variants pile into S.
Corpus variant_corpus() {
    return testsupport::corpus_from_texts({
        {"S", "alpha alpha alpha beta gamma delta epsilon"},
        {"S", "alpha alpha alpha beta gamma delta zeta"},
        {"S", "alpha alpha alpha beta gamma delta eta"},
        {"B", "alpha membrane drainage sump liner pit"},
        {"P", "alpha sealant primer supplier datasheet"},
        {"T", "retention insurance liability invoice"},
    });
}

EngineConfig variant_config() {
    EngineConfig cfg;
    cfg.priors.section_boosts = {{"S", 3.0}, {"B", 1.0}, {"P", 1.0}, {"T", -2.5}};
    cfg.bubble.token_budget = 18;
    cfg.bubble.max_chunks = 10;
    cfg.bubble.delta = 0.55;
    return cfg;
}

QuerySet single_query(const std::string& q) {
    QuerySet qs;
    qs.entries.push_back({"multi_facet", q});
    return qs;
}

}  // namespace

TEST_CASE("canonical variants flip exactly the documented gates") {
    auto flat = canonical_variant("flat_topk", 800);
    CHECK_FALSE(flat.structure);
    CHECK_FALSE(flat.diversity);
    CHECK_FALSE(flat.section_budgets);
    auto structure = canonical_variant("plus_structure", 800);
    CHECK(structure.structure);
    CHECK_FALSE(structure.diversity);
    auto diversity = canonical_variant("plus_diversity", 800);
    CHECK_FALSE(diversity.structure);
    CHECK(diversity.diversity);
    auto full = canonical_variant("full", 800);
    CHECK(full.structure);
    CHECK(full.diversity);
    CHECK(full.section_budgets);
    CHECK_THROWS_AS(canonical_variant("nope", 800), UnknownVariant);
}

TEST_CASE("flat_topk fills the budget from the dominant section") {
    auto corpus = variant_corpus();
    auto cfg = variant_config();
    auto run = run_variant("alpha", corpus, canonical_variant("flat_topk", 18), cfg);
    // tf ranking: the three S near-duplicates (tf 3) outrank everything; two
    // of them fill 14 of 18 tokens and nothing else fits.
    CHECK(run.metrics.unique_sections == 1);
    CHECK(run.metrics.tokens_used <= 18);
    for (const auto& sel : run.bubble.selected) {
        CHECK(sel.cand.candidate.chunk->section_label == "S");
    }
}

TEST_CASE("full variant spreads across sections and uses fewer tokens") {
    auto corpus = variant_corpus();
    auto cfg = variant_config();
    auto flat = run_variant("alpha", corpus, canonical_variant("flat_topk", 18), cfg);
    auto full = run_variant("alpha", corpus, canonical_variant("full", 18), cfg);
    CHECK(full.metrics.unique_sections > flat.metrics.unique_sections);
    CHECK(full.metrics.avg_overlap < flat.metrics.avg_overlap);
}

TEST_CASE("empty query: priors only; flat_topk selects nothing") {
    auto corpus = variant_corpus();
    auto cfg = variant_config();
    auto flat = run_variant("", corpus, canonical_variant("flat_topk", 18), cfg);
    CHECK(flat.metrics.chunks_selected == 0);
    auto full = run_variant("", corpus, canonical_variant("full", 18), cfg);
    CHECK(full.metrics.chunks_selected > 0);  // prior pool supplies candidates
}

TEST_CASE("single selected chunk has avg_overlap zero") {
    auto corpus = testsupport::corpus_from_texts({{"S", "alpha beta gamma"}});
    EngineConfig cfg;
    auto run = run_variant("alpha", corpus, canonical_variant("full", 100), cfg);
    CHECK(run.metrics.chunks_selected == 1);
    CHECK(run.metrics.avg_overlap == 0.0);
}

TEST_CASE("compare_variants") {
    auto corpus = variant_corpus();
    auto cfg = variant_config();

    SUBCASE("free mode emits one aggregate row per variant") {
        auto result = compare_variants(single_query("alpha"), corpus, cfg, false);
        REQUIRE(result.aggregate.size() == 4);
        CHECK(result.per_query.size() == 4);
        for (const auto& row : result.aggregate) CHECK(row.tokens_used <= 18);
    }
    SUBCASE("token-matched clamps every variant to full's realized usage") {
        auto free_full = run_variant("alpha", corpus, canonical_variant("full", 18), cfg);
        auto result = compare_variants(single_query("alpha"), corpus, cfg, true);
        int clamp = result.clamp_per_query.at("alpha");
        CHECK(clamp == free_full.metrics.tokens_used);
        int full_sections = 0;
        for (const auto& row : result.aggregate) {
            CHECK(row.tokens_used <= clamp);
            if (row.variant == "full") full_sections = row.unique_sections;
        }
        for (const auto& row : result.aggregate) {
            CHECK(full_sections >= row.unique_sections);
        }
    }
}

TEST_CASE("section_allocation columns sum to each variant's tokens_used") {
    auto corpus = variant_corpus();
    auto cfg = variant_config();
    auto table = section_allocation("alpha", corpus, cfg);
    for (const auto& variant : canonical_variants(18)) {
        auto run = run_variant("alpha", corpus, variant, cfg);
        int column_sum = 0;
        for (const auto& [bucket, by_variant] : table) {
            auto it = by_variant.find(variant.name);
            if (it != by_variant.end()) column_sum += it->second;
        }
        CHECK(column_sum == run.metrics.tokens_used);
    }
}

TEST_CASE("ablation grid") {
    auto corpus = variant_corpus();
    auto cfg = variant_config();
    auto rows = ablation_grid(single_query("alpha"), corpus, cfg);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].configuration == "Base");
    CHECK(rows[1].configuration == "+ Structure");
    CHECK(rows[2].configuration == "+ Diversity");
    CHECK(rows[3].configuration == "Full");
    CHECK(rows[3].avg_overlap <= rows[0].avg_overlap);

    // Disabling both gates is flat_topk by definition.
    auto flat = run_variant("alpha", corpus, canonical_variant("flat_topk", 18), cfg);
    CHECK(rows[0].tokens == flat.metrics.tokens_used);
    CHECK(rows[0].sections == flat.metrics.unique_sections);
}

TEST_CASE("delta sweep boundary semantics") {
    auto corpus = testsupport::corpus_from_texts({
        {"S", "alpha beta gamma"},
        {"S", "alpha beta delta"},     // overlap 2/3 with the first
        {"B", "epsilon zeta eta"},     // disjoint
    });
    EngineConfig cfg;
    cfg.priors.section_boosts = {{"S", 1.0}, {"B", 1.0}};
    cfg.bubble.token_budget = 100;
    cfg.bubble.section_fractions.reset();

    SUBCASE("delta 1.0 rejects only full containment") {
        auto rows = delta_sweep("alpha", corpus, cfg, {1.0});
        CHECK(rows[0].unique_sections == 2);
        CHECK(rows[0].tokens_used == 9);  // everything admitted

        auto contained = testsupport::corpus_from_texts({
            {"S", "alpha alpha alpha beta gamma"},  // ranks first on tf
            {"S", "alpha beta"},  // word set fully contained: overlap 1.0
        });
        auto rows2 = delta_sweep("alpha", contained, cfg, {1.0});
        CHECK(rows2[0].tokens_used == 5);  // the contained chunk is rejected
    }
    SUBCASE("delta 0 rejects any chunk sharing a word, keeps disjoint ones") {
        auto rows = delta_sweep("alpha", corpus, cfg, {0.0});
        // First S chunk in, near-dup rejected, disjoint B chunk still in.
        CHECK(rows[0].tokens_used == 6);
        CHECK(rows[0].unique_sections == 2);
    }
    SUBCASE("pass counts never decrease over the default grid") {
        auto rows = delta_sweep("alpha", corpus, cfg, default_delta_grid());
        for (size_t i = 1; i < rows.size(); ++i) {
            CHECK(rows[i].redundancy_passes >= rows[i - 1].redundancy_passes);
        }
    }
}

TEST_CASE("load_query_set") {
    auto dir = testsupport::make_temp_dir("qs");

    SUBCASE("bundled set: 25 queries, categories 6/6/6/7") {
        auto qs = load_query_set(testsupport::data_dir() / "demo" / "queries.txt");
        CHECK(qs.entries.size() == 25);
        auto counts = qs.category_counts();
        CHECK(counts["narrow_fact"] == 6);
        CHECK(counts["multi_facet"] == 6);
        CHECK(counts["cross_sheet"] == 6);
        CHECK(counts["table_dependent"] == 7);
    }
    SUBCASE("parses category-tagged entries") {
        std::ofstream(dir / "one.txt") << "# comment\nmulti_facet: scope of work\n";
        auto qs = load_query_set(dir / "one.txt");
        REQUIRE(qs.entries.size() == 1);
        CHECK(qs.entries[0].category == "multi_facet");
        CHECK(qs.entries[0].query == "scope of work");
    }
    SUBCASE("empty file is an error") {
        std::ofstream(dir / "empty.txt") << "# only a comment\n";
        CHECK_THROWS_AS(load_query_set(dir / "empty.txt"), EmptyQuerySet);
    }
    SUBCASE("malformed line reports its number") {
        std::ofstream(dir / "bad.txt") << "multi_facet: fine\nnot a query line\n";
        try {
            load_query_set(dir / "bad.txt");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find(":2:") != std::string::npos);
        }
    }
    SUBCASE("unknown category is an error") {
        std::ofstream(dir / "cat.txt") << "mystery: question\n";
        CHECK_THROWS_AS(load_query_set(dir / "cat.txt"), DataError);
    }
}

TEST_CASE("every variant's tokens stay within its budget; overlap below delta") {
    std::mt19937 rng(777);
    for (int round = 0; round < 20; ++round) {
        auto inst = testsupport::random_instance(rng);
        inst.config.bubble.delta = 0.3 + (rng() % 7) * 0.1;  // delta > 0
        for (const auto& variant : canonical_variants(inst.config.bubble.token_budget)) {
            auto run = run_variant(inst.query, inst.corpus, variant, inst.config);
            CHECK(run.metrics.tokens_used <= variant.token_budget);
            if (variant.diversity && run.metrics.chunks_selected > 1) {
                CHECK(run.metrics.avg_overlap < inst.config.bubble.delta);
            }
        }
    }
}

TEST_CASE("report CSVs are deterministic across runs") {
    auto corpus = variant_corpus();
    auto cfg = variant_config();
    auto qs = single_query("alpha");
    auto r1 = report_compare(qs, corpus, cfg, false);
    auto r2 = report_compare(qs, corpus, cfg, false);
    CHECK(r1.files == r2.files);
    CHECK(r1.summary["token_std_dev"] == 0.0);

    auto a1 = report_ablation(qs, corpus, cfg);
    auto a2 = report_ablation(qs, corpus, cfg);
    CHECK(a1.files == a2.files);
}
