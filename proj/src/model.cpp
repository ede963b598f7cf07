#include "sagin/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sagin {

namespace {

template <typename T>
std::vector<std::vector<T>> grid(int a, int b, T v = T{}) {
    return std::vector<std::vector<T>>(a, std::vector<T>(b, v));
}

template <typename T>
std::vector<std::vector<std::vector<T>>> cube(int a, int b, int c, T v = T{}) {
    return std::vector<std::vector<std::vector<T>>>(a, grid<T>(b, c, v));
}

std::string cell(int m, int n) {
    return "m=" + std::to_string(m) + ",n=" + std::to_string(n);
}

}  // namespace

Decision Decision::sized(int mus, int uavs, int slots) {
    Decision d;
    d.trajectories.assign(uavs, std::vector<Vec2>(slots, Vec2::Zero()));
    d.assoc = cube<std::uint8_t>(mus, uavs, slots, 0);
    d.offload = grid<OffloadSplit>(mus, slots);
    d.power_uav = cube<double>(mus, uavs, slots, 0.0);
    d.power_leo = grid<double>(mus, slots, 0.0);
    d.freq_local = grid<double>(mus, slots, 0.0);
    d.freq_uav = cube<double>(mus, uavs, slots, 0.0);
    d.freq_leo = grid<double>(mus, slots, 0.0);
    return d;
}

int Decision::assoc_of(int m, int n) const {
    for (std::size_t k = 0; k < assoc[m].size(); ++k)
        if (assoc[m][k][n]) return static_cast<int>(k);
    return -1;
}

void link_rates(const Scenario& s, const Decision& d, DerivedQuantities& q) {
    const int M = s.num_mus, K = s.num_uavs, N = s.num_slots;
    q.gain = cube<double>(M, K, N);
    q.rate_uav = cube<double>(M, K, N);
    q.rate_leo = grid<double>(M, N);
    for (int m = 0; m < M; ++m) {
        for (int k = 0; k < K; ++k) {
            for (int n = 0; n < N; ++n) {
                const double dist2 =
                    s.uav_altitude * s.uav_altitude +
                    (d.trajectories[k][n] - s.mu_positions[m]).squaredNorm();
                const double h = s.ref_channel_gain / dist2;
                q.gain[m][k][n] = h;
                const double p = d.power_uav[m][k][n];
                q.rate_uav[m][k][n] =
                    p > 0 ? s.uav_bandwidth * std::log2(1.0 + p * h / s.uav_noise_power)
                          : 0.0;
            }
        }
        for (int n = 0; n < N; ++n) {
            const double p = d.power_leo[m][n];
            q.rate_leo[m][n] =
                p > 0 ? s.leo_bandwidth *
                            std::log2(1.0 + p * s.leo_gain[m] / s.leo_noise_power)
                      : 0.0;
        }
    }
}

void latencies(const Scenario& s, const Decision& d, DerivedQuantities& q) {
    const int M = s.num_mus, N = s.num_slots;
    q.lat_local = grid<double>(M, N);
    q.lat_uav = grid<double>(M, N);
    q.lat_leo = grid<double>(M, N);
    q.lat_sum = grid<double>(M, N);
    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n) {
            const OffloadSplit& w = d.offload[m][n];
            const double D = s.task_bits[m][n];
            const double phi = s.cycles_per_bit[m][n];
            double ll = 0, lu = 0, ls = 0;
            if (w.local > kZeroShare && D > 0) {
                const double f = d.freq_local[m][n];
                if (f <= 0)
                    throw InfeasibleDecision("local path used with zero frequency at " + cell(m, n));
                ll = w.local * D * phi / f;
            }
            if (w.uav > kZeroShare && D > 0) {
                const int k = d.assoc_of(m, n);
                if (k < 0)
                    throw InfeasibleDecision("UAV path used without association at " + cell(m, n));
                const double r = q.rate_uav[m][k][n];
                const double f = d.freq_uav[m][k][n];
                if (r <= 0 || f <= 0)
                    throw InfeasibleDecision("UAV path used with zero rate or frequency at " + cell(m, n));
                lu = w.uav * D / r + w.uav * D * phi / f;
            }
            if (w.leo > kZeroShare && D > 0) {
                const double r = q.rate_leo[m][n];
                const double f = d.freq_leo[m][n];
                if (r <= 0 || f <= 0)
                    throw InfeasibleDecision("LEO path used with zero rate or frequency at " + cell(m, n));
                ls = w.leo * D / r + w.leo * D * phi / f;
            }
            q.lat_local[m][n] = ll;
            q.lat_uav[m][n] = lu;
            q.lat_leo[m][n] = ls;
            q.lat_sum[m][n] = std::max({ll, lu, ls});
        }
    }
}

void energies(const Scenario& s, const Decision& d, DerivedQuantities& q) {
    const int M = s.num_mus, K = s.num_uavs, N = s.num_slots;
    q.e_local = grid<double>(M, N);
    q.e_uav_tran = grid<double>(M, N);
    q.e_uav_com = cube<double>(M, K, N);
    q.e_leo_tran = grid<double>(M, N);
    q.e_leo_com = grid<double>(M, N);
    q.e_sum = grid<double>(M, N);
    q.w1 = grid<double>(M, N);
    q.w2 = grid<double>(M, N);
    q.w3 = grid<double>(M, N);
    q.w4 = grid<double>(M, N);
    q.w5 = grid<double>(M, N);
    q.w6 = grid<double>(M, N);
    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n) {
            const OffloadSplit& w = d.offload[m][n];
            const double D = s.task_bits[m][n];
            const double phi = s.cycles_per_bit[m][n];
            const double fl = d.freq_local[m][n];
            const double fs = d.freq_leo[m][n];

            const bool local_used = w.local > kZeroShare && D > 0;
            const bool uav_used = w.uav > kZeroShare && D > 0;
            const bool leo_used = w.leo > kZeroShare && D > 0;

            double e_l = local_used ? s.mu_energy_coeff * fl * fl * w.local * D * phi : 0.0;
            double e_ut = 0.0, e_uc_sum = 0.0;
            double w3 = 0.0;
            const int ka = d.assoc_of(m, n);
            if (ka >= 0) {
                const double r = q.rate_uav[m][ka][n];
                const double fu = d.freq_uav[m][ka][n];
                const double p = d.power_uav[m][ka][n];
                if (uav_used) {
                    if (r <= 0)
                        throw InfeasibleDecision("UAV path used with zero rate at " + cell(m, n));
                    e_ut = p * w.uav * D / r;
                    q.e_uav_com[m][ka][n] =
                        s.uav_energy_coeff * fu * fu * w.uav * D * phi;
                    e_uc_sum = q.e_uav_com[m][ka][n];
                }
                // SP2 coefficient: cost per unit omega^U; 0 when unusable.
                w3 = r > 0 ? p * D / r + s.uav_energy_coeff * fu * fu * D * phi : 0.0;
            }
            double e_st = 0.0, e_sc = 0.0;
            if (leo_used) {
                const double r = q.rate_leo[m][n];
                if (r <= 0)
                    throw InfeasibleDecision("LEO path used with zero rate at " + cell(m, n));
                e_st = d.power_leo[m][n] * w.leo * D / r;
                e_sc = s.leo_energy_coeff * fs * fs * w.leo * D * phi;
            }

            q.e_local[m][n] = e_l;
            q.e_uav_tran[m][n] = e_ut;
            q.e_leo_tran[m][n] = e_st;
            q.e_leo_com[m][n] = e_sc;
            q.e_sum[m][n] = e_l + e_ut + e_uc_sum + e_st + e_sc;

            q.w1[m][n] = e_ut + e_uc_sum;
            q.w2[m][n] = s.mu_energy_coeff * fl * fl * D * phi;
            q.w3[m][n] = w3;
            q.w4[m][n] = (q.rate_leo[m][n] > 0
                              ? d.power_leo[m][n] * D / q.rate_leo[m][n]
                              : 0.0) +
                         s.leo_energy_coeff * fs * fs * D * phi;
            q.w5[m][n] = e_l + e_uc_sum + e_sc;
            q.w6[m][n] = e_ut + e_st;
        }
    }
}

void propulsion(const Scenario& s, const Decision& d, DerivedQuantities& q,
                double min_speed_floor) {
    const int K = s.num_uavs, N = s.num_slots;
    q.speed = grid<double>(K, N);
    q.prop_energy = grid<double>(K, N);
    for (int k = 0; k < K; ++k) {
        for (int n = 1; n < N; ++n) {
            const double v_raw =
                (d.trajectories[k][n] - d.trajectories[k][n - 1]).norm() / s.slot_duration;
            const double v = std::max(v_raw, min_speed_floor);
            q.speed[k][n] = v;
            q.prop_energy[k][n] =
                s.slot_duration * (s.propulsion_c1 * v * v * v + s.propulsion_c2 / v);
        }
    }
}

DerivedQuantities evaluate(const Scenario& s, const Decision& d, double min_speed_floor) {
    DerivedQuantities q;
    propulsion(s, d, q, min_speed_floor);
    link_rates(s, d, q);
    latencies(s, d, q);
    energies(s, d, q);
    double phi = 0.0;
    for (int m = 0; m < s.num_mus; ++m) {
        for (int n = 0; n < s.num_slots; ++n) {
            const double D = s.task_bits[m][n];
            if (D <= 0) continue;
            const double e = q.e_sum[m][n];
            if (e <= 0)
                throw InfeasibleDecision("non-positive E^sum at " + cell(m, n));
            phi += D / e;
        }
    }
    q.objective = phi;
    return q;
}

double objective(const Scenario& s, const Decision& d, DerivedQuantities* out,
                 double min_speed_floor) {
    DerivedQuantities q = evaluate(s, d, min_speed_floor);
    const double phi = q.objective;
    if (out) *out = std::move(q);
    return phi;
}

std::vector<ConstraintViolation> check_feasibility(const Scenario& s, const Decision& d,
                                                   double tol, double min_speed_floor) {
    const int M = s.num_mus, K = s.num_uavs, N = s.num_slots;
    std::vector<ConstraintViolation> v;
    auto add = [&v](const char* tag, const std::string& detail, double residual) {
        v.push_back({tag, detail, residual});
    };

    // (17b) endpoints
    for (int k = 0; k < K; ++k) {
        const double r0 = (d.trajectories[k][0] - s.uav_start[k]).norm();
        const double r1 = (d.trajectories[k][N - 1] - s.uav_end[k]).norm();
        if (r0 > tol) add("17b", "k=" + std::to_string(k) + " start", r0);
        if (r1 > tol) add("17b", "k=" + std::to_string(k) + " end", r1);
    }
    // (17c) pairwise separation
    for (int k = 0; k < K; ++k)
        for (int i = k + 1; i < K; ++i)
            for (int n = 0; n < N; ++n) {
                const double dist = (d.trajectories[k][n] - d.trajectories[i][n]).norm();
                if (dist < s.min_uav_separation - tol)
                    add("17c",
                        "k=" + std::to_string(k) + ",i=" + std::to_string(i) +
                            ",n=" + std::to_string(n),
                        s.min_uav_separation - dist);
            }
    // (17d) speed
    for (int k = 0; k < K; ++k)
        for (int n = 1; n < N; ++n) {
            const double speed =
                (d.trajectories[k][n] - d.trajectories[k][n - 1]).norm() / s.slot_duration;
            if (speed > s.max_uav_speed + tol)
                add("17d", "k=" + std::to_string(k) + ",n=" + std::to_string(n),
                    speed - s.max_uav_speed);
        }
    // (17e)-(17f) association
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            int count = 0;
            for (int k = 0; k < K; ++k) {
                if (d.assoc[m][k][n] > 1)
                    add("17e", "m=" + std::to_string(m) + ",k=" + std::to_string(k) +
                                   ",n=" + std::to_string(n),
                        d.assoc[m][k][n] - 1.0);
                count += d.assoc[m][k][n] ? 1 : 0;
            }
            if (count != 1)
                add("17f", cell(m, n), std::abs(count - 1.0));
        }
    // (17g)-(17h) offload simplex
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            const OffloadSplit& w = d.offload[m][n];
            for (double x : {w.local, w.uav, w.leo}) {
                if (x < -tol) add("17g", cell(m, n), -x);
                if (x > 1 + tol) add("17g", cell(m, n), x - 1);
            }
            if (std::abs(w.sum() - 1.0) > 1e-9 + tol)
                add("17h", cell(m, n), std::abs(w.sum() - 1.0));
        }
    // (17i)-(17k) frequencies
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            if (d.freq_local[m][n] < -tol) add("17i", cell(m, n), -d.freq_local[m][n]);
            if (d.freq_local[m][n] > s.mu_max_freq + tol)
                add("17i", cell(m, n), d.freq_local[m][n] - s.mu_max_freq);
            if (d.freq_leo[m][n] < -tol) add("17k", cell(m, n), -d.freq_leo[m][n]);
        }
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n) {
            double total = 0;
            for (int m = 0; m < M; ++m) {
                if (d.freq_uav[m][k][n] < -tol)
                    add("17j", "m=" + std::to_string(m) + ",k=" + std::to_string(k) +
                                   ",n=" + std::to_string(n),
                        -d.freq_uav[m][k][n]);
                total += d.freq_uav[m][k][n];
            }
            if (total > s.uav_max_freq + tol)
                add("17j", "k=" + std::to_string(k) + ",n=" + std::to_string(n),
                    total - s.uav_max_freq);
        }
    for (int n = 0; n < N; ++n) {
        double total = 0;
        for (int m = 0; m < M; ++m) total += d.freq_leo[m][n];
        if (total > s.leo_max_freq + tol)
            add("17k", "n=" + std::to_string(n), total - s.leo_max_freq);
    }
    // (17l)-(17m) powers
    for (int m = 0; m < M; ++m) {
        for (int k = 0; k < K; ++k)
            for (int n = 0; n < N; ++n) {
                const double p = d.power_uav[m][k][n];
                if (p < -tol)
                    add("17l", "m=" + std::to_string(m) + ",k=" + std::to_string(k) +
                                   ",n=" + std::to_string(n),
                        -p);
                if (p > s.max_power_uav_link + tol)
                    add("17l", "m=" + std::to_string(m) + ",k=" + std::to_string(k) +
                                   ",n=" + std::to_string(n),
                        p - s.max_power_uav_link);
            }
        for (int n = 0; n < N; ++n) {
            const double p = d.power_leo[m][n];
            if (p < -tol) add("17m", cell(m, n), -p);
            if (p > s.max_power_leo_link + tol)
                add("17m", cell(m, n), p - s.max_power_leo_link);
        }
    }
    // (17n) latency and (17p) UAV energy budget need the derived quantities.
    try {
        DerivedQuantities q;
        propulsion(s, d, q, min_speed_floor);
        link_rates(s, d, q);
        latencies(s, d, q);
        energies(s, d, q);
        for (int m = 0; m < M; ++m)
            for (int n = 0; n < N; ++n)
                if (q.lat_sum[m][n] > s.slot_duration + tol)
                    add("17n", cell(m, n), q.lat_sum[m][n] - s.slot_duration);
        for (int k = 0; k < K; ++k) {
            double total = 0;
            for (int n = 0; n < N; ++n) {
                total += q.prop_energy[k][n];
                for (int m = 0; m < M; ++m) total += q.e_uav_com[m][k][n];
            }
            if (total > s.uav_energy_budget + tol)
                add("17p", "k=" + std::to_string(k), total - s.uav_energy_budget);
        }
    } catch (const InfeasibleDecision& e) {
        add("17n", std::string("unusable path: ") + e.what(),
            std::numeric_limits<double>::infinity());
    }
    return v;
}

}  // namespace sagin
