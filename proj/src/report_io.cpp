#include "sagin/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sagin {

namespace {

using nlohmann::json;

json decision_to_json(const Decision& d) {
    json j;
    j["trajectories"] = json::array();
    for (const auto& row : d.trajectories) {
        json r = json::array();
        for (const Vec2& p : row) r.push_back(json::array({p.x(), p.y()}));
        j["trajectories"].push_back(r);
    }
    j["assoc"] = d.assoc;
    j["offload"] = json::array();
    for (const auto& row : d.offload) {
        json r = json::array();
        for (const OffloadSplit& w : row) r.push_back(json::array({w.local, w.uav, w.leo}));
        j["offload"].push_back(r);
    }
    j["power_uav"] = d.power_uav;
    j["power_leo"] = d.power_leo;
    j["freq_local"] = d.freq_local;
    j["freq_uav"] = d.freq_uav;
    j["freq_leo"] = d.freq_leo;
    return j;
}

Decision decision_from_json(const json& j) {
    Decision d;
    for (const auto& row : j.at("trajectories")) {
        std::vector<Vec2> r;
        for (const auto& p : row) r.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        d.trajectories.push_back(std::move(r));
    }
    d.assoc = j.at("assoc").get<decltype(d.assoc)>();
    for (const auto& row : j.at("offload")) {
        std::vector<OffloadSplit> r;
        for (const auto& w : row)
            r.push_back({w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()});
        d.offload.push_back(std::move(r));
    }
    d.power_uav = j.at("power_uav").get<decltype(d.power_uav)>();
    d.power_leo = j.at("power_leo").get<decltype(d.power_leo)>();
    d.freq_local = j.at("freq_local").get<decltype(d.freq_local)>();
    d.freq_uav = j.at("freq_uav").get<decltype(d.freq_uav)>();
    d.freq_leo = j.at("freq_leo").get<decltype(d.freq_leo)>();
    return d;
}

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::Converged: return "converged";
        case Termination::MaxIters: return "max_iters";
        case Termination::InfeasibleSubproblem: return "infeasible_subproblem";
    }
    return "max_iters";
}

Termination termination_from_name(const std::string& name) {
    if (name == "converged") return Termination::Converged;
    if (name == "max_iters") return Termination::MaxIters;
    if (name == "infeasible_subproblem") return Termination::InfeasibleSubproblem;
    throw std::invalid_argument("unknown termination: " + name);
}

}  // namespace

std::string report_to_json(const RunReport& report) {
    json j;
    j["scheme"] = report.scheme;
    j["fixed_split"] =
        json::array({report.spec.fixed_split[0], report.spec.fixed_split[1],
                     report.spec.fixed_split[2]});
    j["single_uav_index"] = report.spec.single_uav_index;
    j["termination"] = termination_name(report.termination);
    j["trace"] = json::array();
    for (const IterationRecord& r : report.trace) {
        // Wall-clock columns live in trace.csv only; run.json stays
        // byte-identical across repeated runs.
        j["trace"].push_back({{"iteration", r.iteration},
                              {"phi", r.phi},
                              {"surrogate", r.surrogate},
                              {"d_sp1", r.d_sp1},
                              {"d_sp2", r.d_sp2},
                              {"d_sp3", r.d_sp3},
                              {"d_sp4", r.d_sp4},
                              {"max_residual", r.max_residual}});
    }
    j["final_decision"] = decision_to_json(report.final_decision);
    j["final_weights"] = report.final_weights.y;
    j["sca_steps"] = json::array();
    for (const ScaStepRecord& st : report.sca_steps) {
        j["sca_steps"].push_back({{"step", st.step},
                                  {"accepted", st.accepted},
                                  {"objective_before", st.objective_before},
                                  {"objective_after", st.objective_after},
                                  {"max_speed", st.max_speed},
                                  {"min_separation", st.min_separation},
                                  {"endpoint_residual", st.endpoint_residual},
                                  {"max_uav_latency", st.max_uav_latency}});
    }
    return j.dump(2);
}

RunReport report_from_json(const std::string& text) {
    const json j = json::parse(text);
    RunReport r;
    r.scheme = j.at("scheme").get<std::string>();
    r.spec.scheme = scheme_from_name(r.scheme);
    const auto& split = j.at("fixed_split");
    r.spec.fixed_split = {split.at(0).get<double>(), split.at(1).get<double>(),
                          split.at(2).get<double>()};
    r.spec.single_uav_index = j.at("single_uav_index").get<int>();
    r.termination = termination_from_name(j.at("termination").get<std::string>());
    for (const auto& t : j.at("trace")) {
        IterationRecord rec;
        rec.iteration = t.at("iteration").get<int>();
        rec.phi = t.at("phi").get<double>();
        rec.surrogate = t.at("surrogate").get<double>();
        rec.d_sp1 = t.at("d_sp1").get<double>();
        rec.d_sp2 = t.at("d_sp2").get<double>();
        rec.d_sp3 = t.at("d_sp3").get<double>();
        rec.d_sp4 = t.at("d_sp4").get<double>();
        rec.max_residual = t.at("max_residual").get<double>();
        r.trace.push_back(rec);
    }
    r.final_decision = decision_from_json(j.at("final_decision"));
    r.final_weights.y = j.at("final_weights").get<std::vector<std::vector<double>>>();
    for (const auto& st : j.at("sca_steps")) {
        ScaStepRecord rec;
        rec.step = st.at("step").get<int>();
        rec.accepted = st.at("accepted").get<bool>();
        rec.objective_before = st.at("objective_before").get<double>();
        rec.objective_after = st.at("objective_after").get<double>();
        rec.max_speed = st.at("max_speed").get<double>();
        rec.min_separation = st.at("min_separation").get<double>();
        rec.endpoint_residual = st.at("endpoint_residual").get<double>();
        rec.max_uav_latency = st.at("max_uav_latency").get<double>();
        r.sca_steps.push_back(rec);
    }
    return r;
}

void save_report(const RunReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << report_to_json(report) << "\n";
}

RunReport load_report(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open report file: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return report_from_json(buf.str());
}

namespace {

struct CsvFile {
    std::FILE* f = nullptr;
    explicit CsvFile(const std::string& path) : f(std::fopen(path.c_str(), "w")) {
        if (!f) throw std::runtime_error("cannot open for writing: " + path);
    }
    ~CsvFile() {
        if (f) std::fclose(f);
    }
    void row_start(bool& first) { first = true; }
    void num(bool& first, double v) {
        std::fprintf(f, first ? "%.9g" : ",%.9g", v);
        first = false;
    }
    void integer(bool& first, long v) {
        std::fprintf(f, first ? "%ld" : ",%ld", v);
        first = false;
    }
    void end_row() { std::fprintf(f, "\n"); }
    void header(const char* h) { std::fprintf(f, "%s\n", h); }
};

}  // namespace

void write_trace_csv(const RunReport& report, const std::string& path) {
    CsvFile csv(path);
    csv.header("iter,phi,surrogate,d_sp1,d_sp2,d_sp3,d_sp4,max_residual,ms_sp1,ms_sp2,ms_sp3,ms_sp4");
    for (const IterationRecord& r : report.trace) {
        bool first = true;
        csv.integer(first, r.iteration);
        csv.num(first, r.phi);
        csv.num(first, r.surrogate);
        csv.num(first, r.d_sp1);
        csv.num(first, r.d_sp2);
        csv.num(first, r.d_sp3);
        csv.num(first, r.d_sp4);
        csv.num(first, r.max_residual);
        csv.num(first, r.ms_sp1);
        csv.num(first, r.ms_sp2);
        csv.num(first, r.ms_sp3);
        csv.num(first, r.ms_sp4);
        csv.end_row();
    }
}

void write_trajectories_csv(const RunReport& report, const std::string& path) {
    CsvFile csv(path);
    csv.header("k,n,x,y");
    const auto& tr = report.final_decision.trajectories;
    for (std::size_t k = 0; k < tr.size(); ++k)
        for (std::size_t n = 0; n < tr[k].size(); ++n) {
            bool first = true;
            csv.integer(first, static_cast<long>(k));
            csv.integer(first, static_cast<long>(n));
            csv.num(first, tr[k][n].x());
            csv.num(first, tr[k][n].y());
            csv.end_row();
        }
}

void write_allocation_csv(const Scenario& s_in, const RunReport& report,
                          const std::string& path) {
    const Scenario s = scheme_scenario(s_in, report.spec);
    const Decision& d = report.final_decision;
    CsvFile csv(path);
    csv.header("m,n,omega_l,omega_u,omega_s,assoc_k,p_uav,p_leo,f_l,f_u,f_s");
    for (int m = 0; m < s.num_mus; ++m)
        for (int n = 0; n < s.num_slots; ++n) {
            const int k = d.assoc_of(m, n);
            bool first = true;
            csv.integer(first, m);
            csv.integer(first, n);
            csv.num(first, d.offload[m][n].local);
            csv.num(first, d.offload[m][n].uav);
            csv.num(first, d.offload[m][n].leo);
            csv.integer(first, k);
            csv.num(first, k >= 0 ? d.power_uav[m][k][n] : 0.0);
            csv.num(first, d.power_leo[m][n]);
            csv.num(first, d.freq_local[m][n]);
            csv.num(first, k >= 0 ? d.freq_uav[m][k][n] : 0.0);
            csv.num(first, d.freq_leo[m][n]);
            csv.end_row();
        }
}

void write_energy_csv(const Scenario& s_in, const RunReport& report, const std::string& path) {
    const Scenario s = scheme_scenario(s_in, report.spec);
    const DerivedQuantities q = evaluate(s, report.final_decision);
    CsvFile csv(path);
    csv.header("m,n,e_local,e_uav_tran,e_uav_com,e_leo_tran,e_leo_com,e_sum");
    for (int m = 0; m < s.num_mus; ++m)
        for (int n = 0; n < s.num_slots; ++n) {
            double e_uav_com = 0.0;
            for (int k = 0; k < s.num_uavs; ++k) e_uav_com += q.e_uav_com[m][k][n];
            bool first = true;
            csv.integer(first, m);
            csv.integer(first, n);
            csv.num(first, q.e_local[m][n]);
            csv.num(first, q.e_uav_tran[m][n]);
            csv.num(first, e_uav_com);
            csv.num(first, q.e_leo_tran[m][n]);
            csv.num(first, q.e_leo_com[m][n]);
            csv.num(first, q.e_sum[m][n]);
            csv.end_row();
        }
}

}  // namespace sagin
