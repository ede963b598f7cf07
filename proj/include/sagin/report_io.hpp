#pragma once

// Run artifacts: run.json (the full report, minus wall-clock noise so
// identical runs serialize byte-identically) and the four CSV tables.

#include <string>

#include "sagin/ao_driver.hpp"
#include "sagin/scenario.hpp"

namespace sagin {

std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);

void save_report(const RunReport& report, const std::string& path);
RunReport load_report(const std::string& path);

// CSV columns are fixed by contract:
//   trace.csv        iter,phi,surrogate,d_sp1,d_sp2,d_sp3,d_sp4,max_residual,
//                    ms_sp1,ms_sp2,ms_sp3,ms_sp4
//   trajectories.csv k,n,x,y
//   allocation.csv   m,n,omega_l,omega_u,omega_s,assoc_k,p_uav,p_leo,f_l,f_u,f_s
//   energy.csv       m,n,e_local,e_uav_tran,e_uav_com,e_leo_tran,e_leo_com,e_sum
void write_trace_csv(const RunReport& report, const std::string& path);
void write_trajectories_csv(const RunReport& report, const std::string& path);
void write_allocation_csv(const Scenario& s, const RunReport& report, const std::string& path);
void write_energy_csv(const Scenario& s, const RunReport& report, const std::string& path);

}  // namespace sagin
