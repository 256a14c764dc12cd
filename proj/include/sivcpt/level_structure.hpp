#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sivcpt/spectrum.hpp"
#include "sivcpt/units.hpp"

// Orbital-doublet fine structure of a split-vacancy color center (SiV-like):
// spin-orbit coupling, Zeeman terms and static transverse strain acting on
// the basis {|e+ up>, |e+ down>, |e- up>, |e- down>}.
namespace sivcpt::levels {

enum class Manifold { kGround, kExcited };

using Matrix4c = Eigen::Matrix<std::complex<double>, 4, 4>;
using Vector4c = Eigen::Matrix<std::complex<double>, 4, 1>;

// Transverse ground strain that puts the lower ground doublet 3 GHz apart at
// 0.12 T normal to the symmetry axis (found by root finding on the full
// 4x4 model with the default couplings below).
inline constexpr double kCalibratedGroundStrain = units::ghz(49.588416049);

struct LevelParams {
  double lambda_so_ground = units::ghz(50.0);   // rad/s
  double lambda_so_excited = units::ghz(260.0); // rad/s
  std::array<double, 3> b_field{0.12, 0.0, 0.0};  // tesla, z = symmetry axis
  std::array<double, 2> strain_ground{kCalibratedGroundStrain, 0.0};  // (Egx, Egy), rad/s
  // Excited strain is deliberately not parallel to the ground strain; with
  // parallel strain and a purely transverse field the spin-flip lines vanish.
  std::array<double, 2> strain_excited{units::ghz(43.30127019), units::ghz(25.0)};
  double gyromagnetic_spin = units::ghz(28.0);     // rad/s per tesla
  double gyromagnetic_orbital = units::ghz(28.0);  // rad/s per tesla
  double orbital_quenching = 0.1;

  // Throws DomainError when an invariant is broken.
  void validate() const;

  // Zero field, zero strain; otherwise the defaults above.
  static LevelParams zero_field();
};

Matrix4c build_hamiltonian(const LevelParams& params, Manifold manifold);

struct EigenSystem {
  Manifold manifold = Manifold::kGround;
  double lambda_so = 0.0;             // rad/s, spin-orbit splitting used
  std::array<double, 4> energies{};   // rad/s, ascending
  std::array<Vector4c, 4> states{};
  std::array<double, 4> sz{};         // <S_z> in units of hbar/2 (i.e. <sigma_z>)

  // Lower-doublet splitting E2 - E1 (rad/s).
  double lower_splitting() const { return energies[1] - energies[0]; }
  double upper_splitting() const { return energies[3] - energies[2]; }
};

// Degenerate levels are resolved into S_z eigenstates and ties ordered by
// ascending <S_z>.
EigenSystem eigensystem(const LevelParams& params, Manifold manifold);

struct Transition {
  std::string label;      // A1..A4, B1..B4, C1..C4, D1..D4
  int lower = 0;          // ground eigenstate index
  int upper = 0;          // excited eigenstate index
  double frequency = 0.0; // rad/s, offset from the zero-field C line
  double strength = 0.0;  // in [0, 1]
  bool spin_conserving = false;
};

struct TransitionTable {
  std::vector<Transition> rows;

  const Transition& find(const std::string& label) const;
};

// All 16 ground->excited lines with |<e_j|D|g_i>|^2 strengths, D acting as
// identity on spin and coupling e+ -> e+, e- -> e- with equal amplitude.
// Within each 2x2 branch block the stronger perfect matching is labelled
// spin-conserving (indices 2, 3 by descending frequency), the other one
// spin-flip (1 = higher, 4 = lower frequency).
TransitionTable transition_table(const EigenSystem& ground, const EigenSystem& excited);

// Peak-normalized sum of Lorentzians (FWHM = linewidth) on a laser-detuning
// grid in rad/s.
Spectrum ple_spectrum(const TransitionTable& table, double linewidth,
                      std::span<const double> laser_detuning_grid);

}  // namespace sivcpt::levels
