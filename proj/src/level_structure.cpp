#include "sivcpt/level_structure.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "sivcpt/errors.hpp"

namespace sivcpt::levels {

namespace {

using cd = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;

Matrix2c pauli_x() { Matrix2c m; m << 0, 1, 1, 0; return m; }
Matrix2c pauli_y() { Matrix2c m; m << 0, cd(0, -1), cd(0, 1), 0; return m; }
Matrix2c pauli_z() { Matrix2c m; m << 1, 0, 0, -1; return m; }

// Orbital factor first: index = 2 * orbital + spin.
Matrix4c kron(const Matrix2c& orbital, const Matrix2c& spin) {
  Matrix4c out;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      out.block<2, 2>(2 * a, 2 * b) = orbital(a, b) * spin;
  return out;
}

Matrix4c spin_z_operator() { return kron(Matrix2c::Identity(), pauli_z()); }

// Fix the global phase so the largest component is real and positive.
void normalize_phase(Vector4c& v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const cd c = v(imax);
  if (std::abs(c) > 0) v *= std::conj(c) / std::abs(c);
}

}  // namespace

void LevelParams::validate() const {
  if (!(lambda_so_ground > 0) || !(lambda_so_excited > 0))
    throw DomainError("level params: spin-orbit splittings must be positive");
  if (!(gyromagnetic_spin > 0)) throw DomainError("level params: gyromagnetic_spin must be positive");
  if (!(orbital_quenching >= 0.0 && orbital_quenching <= 1.0))
    throw DomainError("level params: orbital_quenching must lie in [0, 1]");
}

LevelParams LevelParams::zero_field() {
  LevelParams p;
  p.b_field = {0.0, 0.0, 0.0};
  p.strain_ground = {0.0, 0.0};
  p.strain_excited = {0.0, 0.0};
  return p;
}

Matrix4c build_hamiltonian(const LevelParams& params, Manifold manifold) {
  params.validate();
  const bool ground = manifold == Manifold::kGround;
  const double lambda_so = ground ? params.lambda_so_ground : params.lambda_so_excited;
  const auto& strain = ground ? params.strain_ground : params.strain_excited;
  const auto& b = params.b_field;
  const Matrix2c id = Matrix2c::Identity();

  Matrix4c h = -0.5 * lambda_so * kron(pauli_z(), pauli_z());
  h += strain[0] * kron(pauli_x(), id) + strain[1] * kron(pauli_y(), id);
  h += params.orbital_quenching * params.gyromagnetic_orbital * b[2] * kron(pauli_z(), id);
  h += 0.5 * params.gyromagnetic_spin *
       (b[0] * kron(id, pauli_x()) + b[1] * kron(id, pauli_y()) + b[2] * kron(id, pauli_z()));
  return h;
}

EigenSystem eigensystem(const LevelParams& params, Manifold manifold) {
  const Matrix4c h = build_hamiltonian(params, manifold);
  Eigen::SelfAdjointEigenSolver<Matrix4c> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("eigensystem: diagonalization failed");

  Eigen::Vector4d energies = solver.eigenvalues();
  Matrix4c vectors = solver.eigenvectors();
  const Matrix4c sz_op = spin_z_operator();
  const double scale = std::max(1.0, energies.cwiseAbs().maxCoeff());
  const double tie_tol = 1e-9 * scale;

  // Rotate each degenerate cluster onto S_z eigenstates.
  for (int start = 0; start < 4;) {
    int stop = start + 1;
    while (stop < 4 && energies[stop] - energies[start] < tie_tol) ++stop;
    const int k = stop - start;
    if (k > 1) {
      const Eigen::MatrixXcd basis = vectors.middleCols(start, k);
      const Eigen::MatrixXcd projected = basis.adjoint() * sz_op * basis;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> sub(projected);
      vectors.middleCols(start, k) = basis * sub.eigenvectors();
      const double mean = energies.segment(start, k).mean();
      energies.segment(start, k).setConstant(mean);
    }
    start = stop;
  }

  EigenSystem out;
  out.manifold = manifold;
  out.lambda_so = manifold == Manifold::kGround ? params.lambda_so_ground : params.lambda_so_excited;
  std::array<int, 4> order{0, 1, 2, 3};
  std::array<double, 4> sz{};
  for (int i = 0; i < 4; ++i) sz[i] = (vectors.col(i).adjoint() * sz_op * vectors.col(i))(0, 0).real();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (std::abs(energies[a] - energies[b]) >= tie_tol) return energies[a] < energies[b];
    return sz[a] < sz[b];
  });
  for (int i = 0; i < 4; ++i) {
    out.energies[i] = energies[order[i]];
    Vector4c v = vectors.col(order[i]);
    v.normalize();
    normalize_phase(v);
    out.states[i] = v;
    out.sz[i] = sz[order[i]];
  }
  return out;
}

const Transition& TransitionTable::find(const std::string& label) const {
  auto it = std::find_if(rows.begin(), rows.end(), [&](const Transition& t) { return t.label == label; });
  if (it == rows.end()) throw DomainError("transition table: no line labelled " + label);
  return *it;
}

TransitionTable transition_table(const EigenSystem& ground, const EigenSystem& excited) {
  if (ground.manifold != Manifold::kGround || excited.manifold != Manifold::kExcited)
    throw DomainError("transition_table: expected (ground, excited) eigensystems");

  // Zero-field C line: the traceless model puts both lower branches at
  // -lambda/2 when field and strain vanish.
  const double c_line_reference = 0.5 * (ground.lambda_so - excited.lambda_so);

  auto strength = [&](int g, int e) { return std::norm(excited.states[e].dot(ground.states[g])); };

  struct Block {
    char letter;
    int ground_base;
    int excited_base;
  };
  // A: upper excited -> lower ground, B: upper -> upper,
  // C: lower excited -> lower ground, D: lower -> upper.
  const std::array<Block, 4> blocks{{{'A', 0, 2}, {'B', 2, 2}, {'C', 0, 0}, {'D', 2, 0}}};

  TransitionTable table;
  for (const Block& blk : blocks) {
    const int g0 = blk.ground_base, g1 = blk.ground_base + 1;
    const int e0 = blk.excited_base, e1 = blk.excited_base + 1;
    const double direct = strength(g0, e0) + strength(g1, e1);
    const double crossed = strength(g0, e1) + strength(g1, e0);
    std::array<std::pair<int, int>, 2> conserving{{{g0, e0}, {g1, e1}}};
    std::array<std::pair<int, int>, 2> flipping{{{g0, e1}, {g1, e0}}};
    if (crossed > direct) std::swap(conserving, flipping);

    auto make = [&](std::pair<int, int> ge, bool conserve) {
      Transition t;
      t.lower = ge.first;
      t.upper = ge.second;
      t.frequency = excited.energies[ge.second] - ground.energies[ge.first] - c_line_reference;
      t.strength = strength(ge.first, ge.second);
      t.spin_conserving = conserve;
      return t;
    };
    auto by_frequency_desc = [](const Transition& a, const Transition& b) {
      return a.frequency > b.frequency;
    };
    std::array<Transition, 2> cons{make(conserving[0], true), make(conserving[1], true)};
    std::array<Transition, 2> flip{make(flipping[0], false), make(flipping[1], false)};
    std::sort(cons.begin(), cons.end(), by_frequency_desc);
    std::sort(flip.begin(), flip.end(), by_frequency_desc);
    flip[0].label = std::string(1, blk.letter) + "1";
    cons[0].label = std::string(1, blk.letter) + "2";
    cons[1].label = std::string(1, blk.letter) + "3";
    flip[1].label = std::string(1, blk.letter) + "4";
    for (const Transition& t : {flip[0], cons[0], cons[1], flip[1]}) table.rows.push_back(t);
  }

  double max_conserving = 0.0;
  for (const auto& t : table.rows)
    if (t.spin_conserving) max_conserving = std::max(max_conserving, t.strength);
  if (max_conserving > 0.0)
    for (auto& t : table.rows) t.strength /= max_conserving;
  return table;
}

Spectrum ple_spectrum(const TransitionTable& table, double linewidth,
                      std::span<const double> laser_detuning_grid) {
  if (!(linewidth > 0.0)) throw DomainError("ple_spectrum: linewidth must be positive");
  if (laser_detuning_grid.empty()) throw DomainError("ple_spectrum: empty detuning grid");

  Spectrum out;
  out.axis = AxisKind::kLaserDetuning;
  out.signal = SignalKind::kArbitrary;
  out.x.assign(laser_detuning_grid.begin(), laser_detuning_grid.end());
  out.y.assign(out.x.size(), 0.0);
  const double hw2 = 0.25 * linewidth * linewidth;
  for (const auto& line : table.rows) {
    if (line.strength == 0.0) continue;
    for (std::size_t i = 0; i < out.x.size(); ++i) {
      const double d = out.x[i] - line.frequency;
      out.y[i] += line.strength * hw2 / (d * d + hw2);
    }
  }
  const double peak = *std::max_element(out.y.begin(), out.y.end());
  if (peak > 0.0)
    for (double& v : out.y) v /= peak;
  out.validate();
  return out;
}

}  // namespace sivcpt::levels
