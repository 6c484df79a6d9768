// Times the OpenMP kernels against the single-threaded reference
// implementations on matrices large enough for the parallel regions to
// engage. Also cross-checks the outputs so a speedup never comes from
// computing something different.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "assocda/matrix.hpp"
#include "assocda/mmd.hpp"
#include "assocda/rng.hpp"
#include "assocda/serial_ref.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using assocda::Matrix;

Matrix random_matrix(int rows, int cols, assocda::Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.normal();
    return m;
}

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warmup
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto end = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(end - start).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms, double diff) {
    std::printf("%-24s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   max|diff| %.2e\n",
                name, serial_ms, parallel_ms, serial_ms / parallel_ms, diff);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; both columns are serial\n");
#endif

    assocda::Rng rng(42);

    {
        const Matrix a = random_matrix(384, 512, rng);
        const Matrix b = random_matrix(512, 384, rng);
        Matrix out_p, out_s;
        const double tp = time_ms([&] { out_p = assocda::matmul(a, b); }, 5);
        const double ts = time_ms([&] { out_s = assocda::serial::matmul(a, b); }, 5);
        report("matmul 384x512x384", ts, tp, assocda::max_abs_diff(out_p, out_s));
    }
    {
        const Matrix m = random_matrix(1500, 1500, rng);
        Matrix out_p, out_s;
        const double tp = time_ms([&] { out_p = assocda::row_softmax(m); }, 5);
        const double ts = time_ms([&] { out_s = assocda::serial::row_softmax(m); }, 5);
        report("row_softmax 1500x1500", ts, tp, assocda::max_abs_diff(out_p, out_s));
    }
    {
        const Matrix t = assocda::row_softmax(random_matrix(1200, 1200, rng));
        const Matrix p = assocda::row_softmax(random_matrix(1200, 1200, rng));
        double vp = 0, vs = 0;
        const double tp = time_ms([&] { vp = assocda::cross_entropy_rows(t, p, 1e-12); }, 5);
        const double ts =
            time_ms([&] { vs = assocda::serial::cross_entropy_rows(t, p, 1e-12); }, 5);
        report("cross_entropy 1200^2", ts, tp, std::abs(vp - vs));
    }
    {
        const Matrix x = random_matrix(700, 64, rng);
        const Matrix y = random_matrix(700, 64, rng);
        Matrix out_p, out_s;
        const double tp = time_ms([&] { out_p = assocda::rbf_kernel_matrix(x, y, 1.3); }, 5);
        const double ts =
            time_ms([&] { out_s = assocda::serial::rbf_kernel_matrix(x, y, 1.3); }, 5);
        report("rbf_kernel 700x700 d64", ts, tp, assocda::max_abs_diff(out_p, out_s));
    }
    {
        const Matrix x = random_matrix(600, 64, rng);
        const Matrix y = random_matrix(600, 64, rng);
        assocda::MmdConfig cfg;
        cfg.use_median_heuristic = false;
        cfg.fixed_bandwidth = 1.0;
        double vp = 0, vs = 0;
        const double tp = time_ms([&] { vp = assocda::mmd2(x, y, cfg, false).mmd_squared; }, 3);
        const double ts = time_ms(
            [&] { vs = assocda::serial::mmd2_biased(x, y, {0.25, 0.5, 1.0, 2.0, 4.0}); }, 3);
        report("mmd2 600v600 d64 k5", ts, tp, std::abs(vp - vs));
    }
    return 0;
}
