#include "graphcarve/qstate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

#include "graphcarve/errors.hpp"

namespace graphcarve {

void check_qubit_cap(int num_qubits, int cap) {
  if (num_qubits < 0) throw InvalidArgument("negative qubit count");
  if (num_qubits > cap)
    throw CapExceeded("register of " + std::to_string(num_qubits) +
                      " qubits exceeds the dense cap of " + std::to_string(cap));
}

namespace {

void check_qubit(int num_qubits, int qubit) {
  if (qubit < 0 || qubit >= num_qubits)
    throw InvalidArgument("qubit " + std::to_string(qubit) + " outside register of " +
                          std::to_string(num_qubits));
}

std::uint32_t width_mask(int num_qubits) {
  return num_qubits >= 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << num_qubits) - 1;
}

}  // namespace

// ---------------------------------------------------------------- QubitMask

QubitMask::QubitMask(int num_qubits, std::uint32_t bits) : num_qubits_(num_qubits), bits_(bits) {
  check_qubit_cap(num_qubits);
  if ((bits & ~width_mask(num_qubits)) != 0)
    throw InvalidArgument("mask has bits outside the register");
}

QubitMask QubitMask::of(int num_qubits, std::span<const int> qubits) {
  std::uint32_t bits = 0;
  for (int q : qubits) {
    check_qubit(num_qubits, q);
    bits |= qubit_bit(num_qubits, q);
  }
  return QubitMask(num_qubits, bits);
}

QubitMask QubitMask::of(int num_qubits, std::initializer_list<int> qubits) {
  return of(num_qubits, std::span<const int>(qubits.begin(), qubits.size()));
}

bool QubitMask::contains(int qubit) const {
  return qubit >= 0 && qubit < num_qubits_ && (bits_ & qubit_bit(num_qubits_, qubit)) != 0;
}

int QubitMask::count() const { return std::popcount(bits_); }

std::vector<int> QubitMask::qubits() const {
  std::vector<int> out;
  for (int q = 0; q < num_qubits_; ++q)
    if (contains(q)) out.push_back(q);
  return out;
}

// ---------------------------------------------------------------- PureState

PureState::PureState(int num_qubits) : num_qubits_(num_qubits) {
  check_qubit_cap(num_qubits);
  amps_.assign(std::size_t{1} << num_qubits, complex{});
  amps_[0] = 1.0;
}

PureState::PureState(int num_qubits, std::vector<complex> amps)
    : num_qubits_(num_qubits), amps_(std::move(amps)) {
  check_qubit_cap(num_qubits);
  if (amps_.size() != (std::size_t{1} << num_qubits))
    throw InvalidArgument("amplitude count does not match 2^num_qubits");
}

PureState PureState::basis(int num_qubits, std::uint32_t index) {
  PureState s(num_qubits);
  if (index >= s.dim()) throw InvalidArgument("basis index out of range");
  s.amps_[0] = 0.0;
  s.amps_[index] = 1.0;
  return s;
}

PureState PureState::plus(int num_qubits) {
  PureState s(num_qubits);
  const double a = std::pow(2.0, -0.5 * num_qubits);
  std::fill(s.amps_.begin(), s.amps_.end(), complex{a, 0.0});
  return s;
}

PureState PureState::product(const std::string& ket) {
  const int n = static_cast<int>(ket.size());
  check_qubit_cap(n);
  std::vector<complex> amps(std::size_t{1} << n, complex{1.0, 0.0});
  const double h = 1.0 / std::sqrt(2.0);
  for (int q = 0; q < n; ++q) {
    const std::uint32_t bit = qubit_bit(n, q);
    for (std::size_t i = 0; i < amps.size(); ++i) {
      const bool one = (i & bit) != 0;
      switch (ket[static_cast<std::size_t>(q)]) {
        case '0': amps[i] *= one ? 0.0 : 1.0; break;
        case '1': amps[i] *= one ? 1.0 : 0.0; break;
        case '+': amps[i] *= h; break;
        case '-': amps[i] *= one ? -h : h; break;
        default: throw InvalidArgument("ket symbol must be one of 0 1 + -");
      }
    }
  }
  return PureState(n, std::move(amps));
}

double PureState::norm_squared() const {
  double sum = 0.0;
  for (const auto& a : amps_) sum += std::norm(a);
  return sum;
}

double PureState::normalize() {
  const double n = std::sqrt(norm_squared());
  if (n == 0.0) throw InvalidArgument("cannot normalize the zero vector");
  for (auto& a : amps_) a /= n;
  return n;
}

void PureState::x_mask_inplace(std::uint32_t mask) {
  if ((mask & ~width_mask(num_qubits_)) != 0) throw InvalidArgument("mask wider than register");
  if (mask == 0) return;
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    const std::size_t j = i ^ mask;
    if (i < j) std::swap(amps_[i], amps_[j]);
  }
}

void PureState::ry_inplace(int qubit, double theta) {
  check_qubit(num_qubits_, qubit);
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  const std::uint32_t bit = qubit_bit(num_qubits_, qubit);
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    if (i & bit) continue;
    const complex a0 = amps_[i];
    const complex a1 = amps_[i | bit];
    amps_[i] = c * a0 - s * a1;
    amps_[i | bit] = s * a0 + c * a1;
  }
}

void PureState::z_inplace(int qubit) {
  check_qubit(num_qubits_, qubit);
  const std::uint32_t bit = qubit_bit(num_qubits_, qubit);
  for (std::size_t i = 0; i < amps_.size(); ++i)
    if (i & bit) amps_[i] = -amps_[i];
}

void PureState::cz_inplace(int u, int v) {
  check_qubit(num_qubits_, u);
  check_qubit(num_qubits_, v);
  if (u == v) throw InvalidArgument("CZ needs two distinct qubits");
  const std::uint32_t both = qubit_bit(num_qubits_, u) | qubit_bit(num_qubits_, v);
  for (std::size_t i = 0; i < amps_.size(); ++i)
    if ((i & both) == both) amps_[i] = -amps_[i];
}

// ------------------------------------------------------------ DensityMatrix

DensityMatrix::DensityMatrix(const PureState& psi) : num_qubits_(psi.num_qubits()), dim_(psi.dim()) {
  check_qubit_cap(num_qubits_, kMaxDensityQubits);
  rho_.assign(dim_ * dim_, complex{});
  add_pure(psi, 1.0);
}

double DensityMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) t += at(i, i).real();
  return t;
}

void DensityMatrix::scale(double factor) {
  for (auto& v : rho_) v *= factor;
}

void DensityMatrix::add_pure(const PureState& psi, double weight) {
  if (psi.dim() != dim_) throw InvalidArgument("dimension mismatch");
  for (std::size_t i = 0; i < dim_; ++i) {
    const complex wi = weight * psi[i];
    for (std::size_t j = 0; j < dim_; ++j) at(i, j) += wi * std::conj(psi[j]);
  }
}

void DensityMatrix::x_mask_inplace(std::uint32_t mask) {
  if ((mask & ~width_mask(num_qubits_)) != 0) throw InvalidArgument("mask wider than register");
  if (mask == 0) return;
  std::vector<complex> out(rho_.size());
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) out[(i ^ mask) * dim_ + (j ^ mask)] = at(i, j);
  rho_ = std::move(out);
}

void DensityMatrix::ry_inplace(int qubit, double theta) {
  check_qubit(num_qubits_, qubit);
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  const std::uint32_t bit = qubit_bit(num_qubits_, qubit);
  // U acts on rows, then U^T (= U^dagger, U real) on columns; both reduce to
  // the same pairwise combination.
  for (std::size_t i = 0; i < dim_; ++i) {
    if (i & bit) continue;
    for (std::size_t col = 0; col < dim_; ++col) {
      const complex a0 = at(i, col);
      const complex a1 = at(i | bit, col);
      at(i, col) = c * a0 - s * a1;
      at(i | bit, col) = s * a0 + c * a1;
    }
  }
  for (std::size_t row = 0; row < dim_; ++row) {
    for (std::size_t j = 0; j < dim_; ++j) {
      if (j & bit) continue;
      const complex a0 = at(row, j);
      const complex a1 = at(row, j | bit);
      at(row, j) = c * a0 - s * a1;
      at(row, j | bit) = s * a0 + c * a1;
    }
  }
}

void DensityMatrix::z_inplace(int qubit) {
  check_qubit(num_qubits_, qubit);
  const std::uint32_t bit = qubit_bit(num_qubits_, qubit);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j)
      if (((i & bit) != 0) != ((j & bit) != 0)) at(i, j) = -at(i, j);
}

void DensityMatrix::cz_inplace(int u, int v) {
  check_qubit(num_qubits_, u);
  check_qubit(num_qubits_, v);
  if (u == v) throw InvalidArgument("CZ needs two distinct qubits");
  const std::uint32_t both = qubit_bit(num_qubits_, u) | qubit_bit(num_qubits_, v);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j)
      if (((i & both) == both) != ((j & both) == both)) at(i, j) = -at(i, j);
}

// ---------------------------------------------------------------- GraphSpec

GraphSpec::GraphSpec(int n_vertices, std::vector<std::pair<int, int>> edges) : n_(n_vertices) {
  if (n_vertices < 0) throw InvalidArgument("negative vertex count");
  std::set<std::pair<int, int>> seen;
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n_ || v >= n_)
      throw InvalidArgument("edge (" + std::to_string(u) + "," + std::to_string(v) +
                            ") references a missing vertex");
    if (u == v) throw InvalidArgument("self-loop on vertex " + std::to_string(u));
    if (u > v) std::swap(u, v);
    if (!seen.insert({u, v}).second)
      throw InvalidArgument("duplicate edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
  }
  edges_.assign(seen.begin(), seen.end());
}

GraphSpec GraphSpec::path(int n) {
  std::vector<std::pair<int, int>> e;
  for (int v = 0; v + 1 < n; ++v) e.emplace_back(v, v + 1);
  return GraphSpec(n, std::move(e));
}

GraphSpec GraphSpec::cycle(int n) {
  if (n < 3) throw InvalidArgument("a cycle needs at least 3 vertices");
  std::vector<std::pair<int, int>> e;
  for (int v = 0; v < n; ++v) e.emplace_back(v, (v + 1) % n);
  return GraphSpec(n, std::move(e));
}

GraphSpec GraphSpec::grid(int w, int h) {
  if (w < 1 || h < 1) throw InvalidArgument("grid dimensions must be positive");
  std::vector<std::pair<int, int>> e;
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const int v = row * w + col;
      if (col + 1 < w) e.emplace_back(v, v + 1);
      if (row + 1 < h) e.emplace_back(v, v + w);
    }
  }
  return GraphSpec(w * h, std::move(e));
}

bool GraphSpec::has_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  return std::binary_search(edges_.begin(), edges_.end(), std::pair{u, v});
}

std::vector<int> GraphSpec::neighbors(int v) const {
  std::vector<int> out;
  for (auto [a, b] : edges_) {
    if (a == v) out.push_back(b);
    if (b == v) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int GraphSpec::degree(int v) const { return static_cast<int>(neighbors(v).size()); }

bool GraphSpec::is_connected() const {
  if (n_ <= 1) return true;
  std::vector<bool> seen(static_cast<std::size_t>(n_), false);
  std::vector<int> stack{0};
  seen[0] = true;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : neighbors(v)) {
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = true;
        ++count;
        stack.push_back(u);
      }
    }
  }
  return count == n_;
}

bool GraphSpec::is_path() const {
  if (n_ == 0) return false;
  if (static_cast<int>(edges_.size()) != n_ - 1 || !is_connected()) return false;
  for (int v = 0; v < n_; ++v)
    if (degree(v) > 2) return false;
  return true;
}

// ---------------------------------------------------------------- BranchMix

double BranchMix::total_weight() const {
  double w = 0.0;
  for (const auto& b : branches) w += b.weight;
  return w;
}

int BranchMix::num_qubits() const {
  return branches.empty() ? 0 : branches.front().state.num_qubits();
}

DensityMatrix BranchMix::to_density() const {
  if (branches.empty()) throw InvalidArgument("empty ensemble");
  DensityMatrix rho(branches.front().state);
  rho.scale(0.0);
  for (const auto& b : branches) rho.add_pure(b.state, b.weight);
  return rho;
}

// ---------------------------------------------------------------- operations

PureState target_graph_state(const GraphSpec& g) {
  PureState s = PureState::plus(g.n_vertices());
  for (auto [u, v] : g.edges()) s.cz_inplace(u, v);
  return s;
}

PureState apply_x_mask(PureState s, QubitMask mask) {
  if (mask.num_qubits() != s.num_qubits()) throw InvalidArgument("mask width differs from register");
  s.x_mask_inplace(mask.bits());
  return s;
}

PureState apply_ry(PureState s, int qubit, double theta) {
  s.ry_inplace(qubit, theta);
  return s;
}

PureState apply_z(PureState s, int qubit) {
  s.z_inplace(qubit);
  return s;
}

PureState apply_cz(PureState s, int u, int v) {
  s.cz_inplace(u, v);
  return s;
}

complex inner_product(const PureState& a, const PureState& b) {
  if (a.num_qubits() != b.num_qubits()) throw InvalidArgument("dimension mismatch in inner product");
  complex sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) sum += std::conj(a[i]) * b[i];
  return sum;
}

double fidelity(const PureState& a, const PureState& b) {
  const double f = std::norm(inner_product(b, a)) / (a.norm_squared() * b.norm_squared());
  return std::clamp(f, 0.0, 1.0);
}

double fidelity(const BranchMix& a, const PureState& b) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& br : a.branches) {
    num += br.weight * fidelity(br.state, b);
    den += br.weight;
  }
  if (den <= 0.0) throw InvalidArgument("fidelity of an empty ensemble");
  return std::clamp(num / den, 0.0, 1.0);
}

double fidelity(const DensityMatrix& rho, const PureState& b) {
  if (rho.num_qubits() != b.num_qubits()) throw InvalidArgument("dimension mismatch in fidelity");
  complex sum = 0.0;
  for (std::size_t i = 0; i < rho.dim(); ++i) {
    complex row = 0.0;
    for (std::size_t j = 0; j < rho.dim(); ++j) row += rho.at(i, j) * b[j];
    sum += std::conj(b[i]) * row;
  }
  const double f = sum.real() / (rho.trace() * b.norm_squared());
  return std::clamp(f, 0.0, 1.0);
}

double global_phase(const PureState& psi, const PureState& target) {
  return std::arg(inner_product(target, psi));
}

// ---------------------------------------------------------------- JSON

nlohmann::json to_json(const PureState& s) {
  nlohmann::json amps = nlohmann::json::array();
  for (const auto& a : s.amps()) amps.push_back({a.real(), a.imag()});
  return {{"num_qubits", s.num_qubits()}, {"amplitudes", std::move(amps)}};
}

PureState pure_state_from_json(const nlohmann::json& j) {
  try {
    const int n = j.at("num_qubits").get<int>();
    std::vector<complex> amps;
    for (const auto& pair : j.at("amplitudes")) {
      if (!pair.is_array() || pair.size() != 2) throw ParseError("amplitude must be a [re, im] pair");
      amps.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
    return PureState(n, std::move(amps));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("state JSON: ") + e.what());
  }
}

nlohmann::json to_json(const GraphSpec& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (auto [u, v] : g.edges()) edges.push_back({u, v});
  return {{"n", g.n_vertices()}, {"edges", std::move(edges)}};
}

GraphSpec graph_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ParseError("graph JSON must be an object {n, edges}");
    for (const auto& [key, value] : j.items())
      if (key != "n" && key != "edges") throw ParseError("graph JSON: unknown key '" + key + "'");
    const int n = j.at("n").get<int>();
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : j.value("edges", nlohmann::json::array())) {
      if (!e.is_array() || e.size() != 2) throw ParseError("graph JSON: edge must be [u, v]");
      edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return GraphSpec(n, std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("graph JSON: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("graph JSON: ") + e.what());
  }
}

}  // namespace graphcarve
