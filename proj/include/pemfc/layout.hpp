#pragma once

#include <string>
#include <vector>

namespace pemfc {

// Slot assignment for the flattened dynamic state. Geometry runs anode
// channel -> anode GDL -> anode CL | membrane | cathode CL -> cathode GDL ->
// cathode channel; GDL node 0 sits next to its channel on the anode side and
// next to the catalyst layer on the cathode side, so indices read
// left-to-right across the cell.
class StateLayout {
public:
  explicit StateLayout(int n_gdl);

  int n_gdl() const { return n_; }
  int size() const { return 4 * n_ + 25; }

  // Water vapor concentrations.
  int cv_agc() const { return 0; }
  int cv_agdl(int k) const { return 1 + k; }           // k = 0 .. n-1
  int cv_acl() const { return 1 + n_; }
  int cv_ccl() const { return 2 + n_; }
  int cv_cgdl(int k) const { return 3 + n_ + k; }      // k = 0 at the CL
  int cv_cgc() const { return 3 + 2 * n_; }

  // Liquid water saturations.
  int s_agdl(int k) const { return s0_ + k; }
  int s_acl() const { return s0_ + n_; }
  int s_ccl() const { return s0_ + n_ + 1; }
  int s_cgdl(int k) const { return s0_ + n_ + 2 + k; }

  // Dissolved membrane water.
  int lambda_acl() const { return l0_; }
  int lambda_mem() const { return l0_ + 1; }
  int lambda_ccl() const { return l0_ + 2; }

  // Reactants.
  int ch2_agc() const { return l0_ + 3; }
  int ch2_acl() const { return l0_ + 4; }
  int co2_ccl() const { return l0_ + 5; }
  int co2_cgc() const { return l0_ + 6; }

  // Auxiliaries.
  int p_sm_a() const { return a0_; }
  int p_sm_c() const { return a0_ + 1; }
  int p_em_a() const { return a0_ + 2; }
  int p_em_c() const { return a0_ + 3; }
  int phi_sm_a() const { return a0_ + 4; }
  int phi_sm_c() const { return a0_ + 5; }
  int w_in_a() const { return a0_ + 6; }
  int w_in_c() const { return a0_ + 7; }
  int w_out_a() const { return a0_ + 8; }
  int w_out_c() const { return a0_ + 9; }
  int a_bp_a() const { return a0_ + 10; }
  int a_bp_c() const { return a0_ + 11; }

  // One human-readable label per slot, in slot order.
  std::vector<std::string> labels() const;

private:
  int n_;
  int s0_;  // first saturation slot
  int l0_;  // first lambda slot
  int a0_;  // first auxiliary slot
};

}  // namespace pemfc
