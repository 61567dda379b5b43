#include <catch2/catch_amalgamated.hpp>

#include "panelkit/plot.hpp"

using namespace panelkit;

namespace {

FoldModel fold_with_curve(std::vector<CurvePoint> pts) {
    FoldModel fm;
    fm.curve = std::move(pts);
    return fm;
}

} // namespace

TEST_CASE("a single fold aggregates with zero-width std bars", "[plot]") {
    std::vector<FoldModel> folds;
    folds.push_back(fold_with_curve({{1, 1.0f, 0.3f, 0.2f}, {2, 0.8f, 0.5f, 0.4f}}));
    const auto stats = aggregate_curves(folds);
    REQUIRE(stats.size() == 2);
    CHECK(stats[0].epoch == 1);
    CHECK(stats[0].train_mean == Catch::Approx(0.3));
    CHECK(stats[0].train_std == 0.0);
    CHECK(stats[0].val_std == 0.0);
    CHECK(stats[1].val_mean == Catch::Approx(0.4));
}

TEST_CASE("identical curves across folds give zero std everywhere", "[plot]") {
    std::vector<FoldModel> folds;
    for (int i = 0; i < 5; ++i)
        folds.push_back(fold_with_curve({{1, 1.0f, 0.25f, 0.2f}, {10, 0.5f, 0.75f, 0.7f}}));
    for (const auto& s : aggregate_curves(folds)) {
        CHECK(s.train_std == 0.0);
        CHECK(s.val_std == 0.0);
    }
}

TEST_CASE("two-fold means and stds match hand arithmetic", "[plot]") {
    std::vector<FoldModel> folds;
    folds.push_back(fold_with_curve({{1, 1.0f, 0.2f, 0.1f}, {2, 0.9f, 0.6f, 0.5f}}));
    folds.push_back(fold_with_curve({{1, 1.0f, 0.4f, 0.3f}, {2, 0.7f, 0.8f, 0.9f}}));
    const auto stats = aggregate_curves(folds);
    REQUIRE(stats.size() == 2);
    // Point 1: train mean (0.2 + 0.4) / 2 = 0.3, population std 0.1.
    CHECK(stats[0].train_mean == Catch::Approx(0.3));
    CHECK(stats[0].train_std == Catch::Approx(0.1));
    CHECK(stats[0].val_mean == Catch::Approx(0.2));
    CHECK(stats[0].val_std == Catch::Approx(0.1));
    // Point 2: train mean 0.7, val mean 0.7 with std 0.2.
    CHECK(stats[1].train_mean == Catch::Approx(0.7));
    CHECK(stats[1].val_mean == Catch::Approx(0.7));
    CHECK(stats[1].val_std == Catch::Approx(0.2));
}

TEST_CASE("curves truncate at epoch 50 by default", "[plot]") {
    std::vector<FoldModel> folds;
    folds.push_back(fold_with_curve({{1, 1, 0.1f, 0.1f},
                                     {30, 1, 0.5f, 0.4f},
                                     {50, 1, 0.6f, 0.5f},
                                     {60, 1, 0.7f, 0.6f},
                                     {100, 1, 0.8f, 0.7f}}));
    const auto stats = aggregate_curves(folds);
    REQUIRE(stats.size() == 3);
    CHECK(stats.back().epoch == 50);

    const auto full = aggregate_curves(folds, 100);
    REQUIRE(full.size() == 5);
    CHECK(full.back().epoch == 100);
}

TEST_CASE("epochs missing from some fold are skipped", "[plot]") {
    std::vector<FoldModel> folds;
    folds.push_back(fold_with_curve({{1, 1, 0.1f, 0.1f}, {2, 1, 0.2f, 0.2f}}));
    folds.push_back(fold_with_curve({{1, 1, 0.3f, 0.3f}}));
    const auto stats = aggregate_curves(folds);
    REQUIRE(stats.size() == 1);
    CHECK(stats[0].epoch == 1);
    CHECK(stats[0].train_mean == Catch::Approx(0.2));
}

TEST_CASE("aggregation requires at least one fold", "[plot]") {
    CHECK_THROWS_AS(aggregate_curves({}), ConfigError);
}

TEST_CASE("the rendered figure has fixed dimensions and plotted ink", "[plot]") {
    std::vector<FoldModel> folds;
    folds.push_back(fold_with_curve({{1, 1.0f, 0.2f, 0.15f}, {25, 0.4f, 0.8f, 0.7f},
                                     {50, 0.3f, 0.9f, 0.8f}}));
    folds.push_back(fold_with_curve({{1, 1.0f, 0.3f, 0.2f}, {25, 0.4f, 0.7f, 0.65f},
                                     {50, 0.3f, 0.95f, 0.85f}}));
    const auto stats = aggregate_curves(folds);
    const auto img = render_curve_figure(stats);
    CHECK(img.width == 800);
    CHECK(img.height == 560);
    REQUIRE(img.px.size() == static_cast<size_t>(800) * 560 * 3);

    size_t train_ink = 0, val_ink = 0, black_ink = 0;
    for (size_t i = 0; i + 2 < img.px.size(); i += 3) {
        if (img.px[i] == 31 && img.px[i + 1] == 119 && img.px[i + 2] == 180) ++train_ink;
        if (img.px[i] == 214 && img.px[i + 1] == 96 && img.px[i + 2] == 32) ++val_ink;
        if (img.px[i] == 0 && img.px[i + 1] == 0 && img.px[i + 2] == 0) ++black_ink;
    }
    CHECK(train_ink > 100);  // series line + error bars + legend
    CHECK(val_ink > 100);
    CHECK(black_ink > 500);  // axes and labels

    // Deterministic rendering.
    const auto again = render_curve_figure(stats);
    CHECK(img.px == again.px);
}

TEST_CASE("bitmap text renders ink only for known glyphs", "[plot]") {
    ImageRGB canvas(64, 12, 255);
    plotdetail::text(canvas, 1, 2, "A1.", Rgb{0, 0, 0});
    size_t ink = 0;
    for (size_t i = 0; i < canvas.px.size(); i += 3)
        if (canvas.px[i] == 0) ++ink;
    CHECK(ink > 10);

    ImageRGB blank(64, 12, 255);
    plotdetail::text(blank, 1, 2, "\x01\x02", Rgb{0, 0, 0}); // unknown -> space
    CHECK(blank.px == ImageRGB(64, 12, 255).px);

    // Lowercase maps onto the uppercase glyph set.
    ImageRGB lower(64, 12, 255), upper(64, 12, 255);
    plotdetail::text(lower, 1, 2, "epoch", Rgb{0, 0, 0});
    plotdetail::text(upper, 1, 2, "EPOCH", Rgb{0, 0, 0});
    CHECK(lower.px == upper.px);
}

TEST_CASE("line drawing is endpoint-inclusive in all octants", "[plot]") {
    ImageRGB img(10, 10, 255);
    plotdetail::line(img, 1, 1, 8, 5, Rgb{0, 0, 0});
    auto black = [&](int x, int y) {
        const size_t i = (static_cast<size_t>(y) * 10 + x) * 3;
        return img.px[i] == 0 && img.px[i + 1] == 0 && img.px[i + 2] == 0;
    };
    CHECK(black(1, 1));
    CHECK(black(8, 5));

    // Out-of-canvas segments clip instead of writing out of bounds.
    ImageRGB edge(4, 4, 255);
    plotdetail::line(edge, -5, -5, 8, 8, Rgb{0, 0, 0});
    const size_t diag = (static_cast<size_t>(2) * 4 + 2) * 3;
    CHECK(edge.px[diag] == 0);
}
