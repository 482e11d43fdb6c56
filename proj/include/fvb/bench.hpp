/* Copyright 2026 The fvb authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License. */

#ifndef FVB_BENCH_HPP
#define FVB_BENCH_HPP

#include <chrono>
#include <ostream>

#include "fvb/encoder.hpp"

namespace fvb {

struct LatencyRecord {
    std::string encoder;
    int resolution = 0;
    Form form = Form::inference;
    int threads = 1;
    int iterations = 0;
    int warmup = 0;
    double min_ms = 0.0;
    double median_ms = 0.0;
    double p90_ms = 0.0;
    int64_t flops = 0;
    int64_t tokens = 0;
};

inline constexpr int kBenchDefaultWarmup = 3;
inline constexpr int kBenchDefaultIters = 11; // odd, for a true median

namespace detail {

// Restores the previous thread cap when the timed region ends.
struct ThreadCapGuard {
    int prev;
    explicit ThreadCapGuard(int n) : prev(thread_cap()) { set_thread_cap(n); }
    ~ThreadCapGuard() { set_thread_cap(prev); }
};

inline constexpr uint64_t kBenchInputSeed = 0xbe9c4u;

} // namespace detail

// Warmup untimed passes, then `iters` timed passes over one fixed seeded
// input. The timed region runs single-threaded unless `threads` raises it.
inline LatencyRecord time_encoder(const EncoderModel& m, int res, int warmup, int iters,
                                  int threads = 1) {
    if (iters < 3) throw usage_error("time_encoder: iterations must be >= 3");
    if (warmup < 0) throw usage_error("time_encoder: warmup must be >= 0");
    const int factor = m.config.downsample_factor();
    if (res < 1 || res % factor != 0)
        throw shape_error("time_encoder: resolution " + std::to_string(res) +
                          " not divisible by required factor " + std::to_string(factor));

    Rng rng(detail::kBenchInputSeed ^ static_cast<uint64_t>(res));
    Tensor input(1, 3, res, res);
    for (float& v : input.data) v = rng.uniform(-1.0f, 1.0f);

    detail::ThreadCapGuard guard(threads);
    for (int i = 0; i < warmup; ++i) (void)forward(m, input);

    std::vector<double> times(iters);
    for (int i = 0; i < iters; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        (void)forward(m, input);
        const auto t1 = std::chrono::steady_clock::now();
        times[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    std::sort(times.begin(), times.end());

    LatencyRecord rec;
    rec.encoder = m.config.name;
    rec.resolution = res;
    rec.form = m.form;
    rec.threads = threads;
    rec.iterations = iters;
    rec.warmup = warmup;
    rec.min_ms = times.front();
    rec.median_ms = iters % 2 == 1 ? times[iters / 2]
                                   : 0.5 * (times[iters / 2 - 1] + times[iters / 2]);
    rec.p90_ms = times[(9 * iters + 9) / 10 - 1];
    rec.flops = count_flops(m.config, res, m.form);
    const int64_t side = res / factor;
    rec.tokens = side * side;
    return rec;
}

// One record per resolution in input order (duplicates included). All
// resolutions are validated before any timing starts.
inline std::vector<LatencyRecord> sweep(const EncoderModel& m, const std::vector<int>& resolutions,
                                        int warmup = kBenchDefaultWarmup,
                                        int iters = kBenchDefaultIters, int threads = 1) {
    if (resolutions.empty()) throw usage_error("sweep: resolution list is empty");
    const int factor = m.config.downsample_factor();
    for (int res : resolutions)
        if (res < 1 || res % factor != 0)
            throw shape_error("sweep: resolution " + std::to_string(res) +
                              " not divisible by required factor " + std::to_string(factor));
    std::vector<LatencyRecord> records;
    records.reserve(resolutions.size());
    for (int res : resolutions) records.push_back(time_encoder(m, res, warmup, iters, threads));
    return records;
}

inline void write_bench_csv_header(std::ostream& out) {
    out << "encoder,resolution,form,threads,iterations,warmup,min_ms,median_ms,p90_ms,flops,tokens\n";
}

inline void write_bench_csv_row(std::ostream& out, const LatencyRecord& r) {
    out << r.encoder << ',' << r.resolution << ',' << to_string(r.form) << ',' << r.threads << ','
        << r.iterations << ',' << r.warmup << ',' << r.min_ms << ',' << r.median_ms << ','
        << r.p90_ms << ',' << r.flops << ',' << r.tokens << '\n';
}

} // namespace fvb

#endif // FVB_BENCH_HPP
