#include "pemfc/layout.hpp"

#include "pemfc/errors.hpp"

namespace pemfc {

StateLayout::StateLayout(int n_gdl) : n_(n_gdl) {
  if (n_ < 1) throw ValidationError("n_gdl", "need at least one GDL node");
  s0_ = 4 + 2 * n_;          // after the 2n+4 vapor slots
  l0_ = s0_ + 2 * n_ + 2;    // after the 2n+2 saturation slots
  a0_ = l0_ + 7;             // after lambda(3) + H2(2) + O2(2)
}

std::vector<std::string> StateLayout::labels() const {
  std::vector<std::string> out(size());
  out[cv_agc()] = "C_v_agc";
  for (int k = 0; k < n_; ++k)
    out[cv_agdl(k)] = "C_v_agdl_" + std::to_string(k + 1);
  out[cv_acl()] = "C_v_acl";
  out[cv_ccl()] = "C_v_ccl";
  for (int k = 0; k < n_; ++k)
    out[cv_cgdl(k)] = "C_v_cgdl_" + std::to_string(k + 1);
  out[cv_cgc()] = "C_v_cgc";
  for (int k = 0; k < n_; ++k)
    out[s_agdl(k)] = "s_agdl_" + std::to_string(k + 1);
  out[s_acl()] = "s_acl";
  out[s_ccl()] = "s_ccl";
  for (int k = 0; k < n_; ++k)
    out[s_cgdl(k)] = "s_cgdl_" + std::to_string(k + 1);
  out[lambda_acl()] = "lambda_acl";
  out[lambda_mem()] = "lambda_mem";
  out[lambda_ccl()] = "lambda_ccl";
  out[ch2_agc()] = "C_H2_agc";
  out[ch2_acl()] = "C_H2_acl";
  out[co2_ccl()] = "C_O2_ccl";
  out[co2_cgc()] = "C_O2_cgc";
  out[p_sm_a()] = "P_sm_a";
  out[p_sm_c()] = "P_sm_c";
  out[p_em_a()] = "P_em_a";
  out[p_em_c()] = "P_em_c";
  out[phi_sm_a()] = "Phi_sm_a";
  out[phi_sm_c()] = "Phi_sm_c";
  out[w_in_a()] = "W_in_a";
  out[w_in_c()] = "W_in_c";
  out[w_out_a()] = "W_out_a";
  out[w_out_c()] = "W_out_c";
  out[a_bp_a()] = "A_bp_a";
  out[a_bp_c()] = "A_bp_c";
  return out;
}

}  // namespace pemfc
