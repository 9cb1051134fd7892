// Timing comparison of the OpenMP kernels against their serial reference:
// chain-graph edge construction and per-anchor splitting transports.

#include "singhyp/splitting.hpp"

#include <chrono>
#include <cstdio>
#include <omp.h>

using namespace singhyp;

namespace {

template <typename F>
double time_ms(F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

} // namespace

int main() {
    std::printf("threads available: %d\n\n", omp_get_max_threads());

    {
        VectorFieldSpec lc = builtin_limit_cycle();
        BoxCover cover(make_box({-3.2, -3.2}, {3.2, 3.2}), {64}, 0.05, 50.0);
        ChainGraph gs, gp;
        double serial = time_ms([&] { gs = build_chain_graph(lc, cover, 8, 1e-6, false); });
        double par = time_ms([&] { gp = build_chain_graph(lc, cover, 8, 1e-6, true); });
        bool same = gs.adj.size() == gp.adj.size();
        for (size_t i = 0; same && i < gs.adj.size(); ++i) {
            same = gs.adj[i].size() == gp.adj[i].size();
            for (size_t j = 0; same && j < gs.adj[i].size(); ++j)
                same = gs.adj[i][j].target == gp.adj[i][j].target;
        }
        std::printf("chain-graph edges (limit cycle, 64x64 cover):\n");
        std::printf("  serial  %8.1f ms\n", serial);
        std::printf("  openmp  %8.1f ms   speedup %.2fx   identical output: %s\n\n", par,
                    serial / par, same ? "yes" : "NO");
    }

    {
        VectorFieldSpec lorenz = builtin_lorenz(10.0, 28.0, 8.0 / 3.0);
        // anchors on the attractor
        std::vector<SplitAnchorInput> anchors;
        Vec x = vec3(1, 1, 1);
        x = advance(lorenz, x, 40.0, 1e-9).x;
        for (int i = 0; i < 24; ++i) {
            OrbitRecord hist = record_orbit(lorenz, x, 2.0, 0.5, 1e-9);
            x = hist.end();
            anchors.push_back({section_of_field(lorenz, x), nullptr, -1});
        }
        SplittingOptions so;
        so.horizon = 20.0;
        SplittingEstimate es, ep;
        so.parallel = false;
        double serial = time_ms([&] { es = estimate_splitting(lorenz, anchors, so); });
        so.parallel = true;
        double par = time_ms([&] { ep = estimate_splitting(lorenz, anchors, so); });
        bool same = es.dimE == ep.dimE && std::abs(es.domination_margin - ep.domination_margin) == 0;
        std::printf("splitting transports (Lorenz, 24 anchors, T=20):\n");
        std::printf("  serial  %8.1f ms\n", serial);
        std::printf("  openmp  %8.1f ms   speedup %.2fx   identical output: %s\n", par,
                    serial / par, same ? "yes" : "NO");
    }
    return 0;
}
