#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace graphcarve {

using complex = std::complex<double>;

/// Largest register held as a dense state vector.
inline constexpr int kMaxQubits = 16;
/// Largest register held as a dense density matrix (sequential probes).
inline constexpr int kMaxDensityQubits = 10;

/// Set of qubits encoded as bits of a basis index.
///
/// Qubit 0 is the most significant bit of the basis index, i.e. the
/// leftmost symbol in |q0 q1 ...>. Masks are therefore tied to a register
/// width.
class QubitMask {
 public:
  QubitMask() = default;
  QubitMask(int num_qubits, std::uint32_t bits);

  static QubitMask of(int num_qubits, std::span<const int> qubits);
  static QubitMask of(int num_qubits, std::initializer_list<int> qubits);

  int num_qubits() const { return num_qubits_; }
  std::uint32_t bits() const { return bits_; }
  bool contains(int qubit) const;
  bool empty() const { return bits_ == 0; }
  int count() const;
  std::vector<int> qubits() const;

  friend bool operator==(const QubitMask&, const QubitMask&) = default;

 private:
  int num_qubits_ = 0;
  std::uint32_t bits_ = 0;
};

/// Basis-index bit for `qubit` in a register of `num_qubits`.
inline std::uint32_t qubit_bit(int num_qubits, int qubit) {
  return std::uint32_t{1} << (num_qubits - 1 - qubit);
}

/// Dense pure state over a qubit register.
class PureState {
 public:
  PureState() = default;
  explicit PureState(int num_qubits);  // |0...0>
  PureState(int num_qubits, std::vector<complex> amps);

  static PureState basis(int num_qubits, std::uint32_t index);
  static PureState plus(int num_qubits);
  /// Parses a ket string of 0,1,+,- symbols, e.g. "0+1-".
  static PureState product(const std::string& ket);

  int num_qubits() const { return num_qubits_; }
  std::size_t dim() const { return amps_.size(); }
  std::span<const complex> amps() const { return amps_; }
  std::span<complex> amps() { return amps_; }
  const complex& operator[](std::size_t i) const { return amps_[i]; }
  complex& operator[](std::size_t i) { return amps_[i]; }

  double norm_squared() const;
  /// Returns the norm before rescaling. Throws on a zero vector.
  double normalize();

  // In-place variants, used by the protocol executor.
  void x_mask_inplace(std::uint32_t mask);
  void ry_inplace(int qubit, double theta);
  void z_inplace(int qubit);
  void cz_inplace(int u, int v);

 private:
  int num_qubits_ = 0;
  std::vector<complex> amps_;
};

/// Dense density matrix, row-major. Holds heralded ensembles whose branch
/// count would otherwise grow with every sequential probe.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(const PureState& psi);

  int num_qubits() const { return num_qubits_; }
  std::size_t dim() const { return dim_; }
  complex& at(std::size_t row, std::size_t col) { return rho_[row * dim_ + col]; }
  const complex& at(std::size_t row, std::size_t col) const { return rho_[row * dim_ + col]; }

  double trace() const;
  void scale(double factor);
  /// Adds weight * |psi><psi|.
  void add_pure(const PureState& psi, double weight);

  void x_mask_inplace(std::uint32_t mask);
  void ry_inplace(int qubit, double theta);
  void z_inplace(int qubit);
  void cz_inplace(int u, int v);

 private:
  int num_qubits_ = 0;
  std::size_t dim_ = 0;
  std::vector<complex> rho_;
};

/// Undirected simple graph on vertices 0..n-1.
class GraphSpec {
 public:
  GraphSpec() = default;
  GraphSpec(int n_vertices, std::vector<std::pair<int, int>> edges);

  static GraphSpec path(int n);
  static GraphSpec cycle(int n);
  /// w x h lattice, vertex (row, col) = row * w + col.
  static GraphSpec grid(int w, int h);

  int n_vertices() const { return n_; }
  /// Sorted, each pair with first < second.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  bool has_edge(int u, int v) const;
  std::vector<int> neighbors(int v) const;
  int degree(int v) const;
  bool is_connected() const;
  bool is_path() const;

  friend bool operator==(const GraphSpec&, const GraphSpec&) = default;

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;
};

/// One classical event on a heralded branch.
struct ProbeEvent {
  bool click = false;
  int round = 0;
  int r_class = -1;  // |r| class kept after a dephased no-click, else -1
  friend bool operator==(const ProbeEvent&, const ProbeEvent&) = default;
};

struct Branch {
  double weight = 0.0;
  PureState state;  // normalized
  std::vector<ProbeEvent> record;
};

/// Sub-normalized ensemble of heralded branches. The deficit
/// 1 - total_weight() is the probability of the events not represented.
struct BranchMix {
  std::vector<Branch> branches;

  double total_weight() const;
  int num_qubits() const;
  DensityMatrix to_density() const;
};

PureState target_graph_state(const GraphSpec& g);

PureState apply_x_mask(PureState s, QubitMask mask);
PureState apply_ry(PureState s, int qubit, double theta);
PureState apply_z(PureState s, int qubit);
PureState apply_cz(PureState s, int u, int v);

complex inner_product(const PureState& a, const PureState& b);  // <a|b>
double fidelity(const PureState& a, const PureState& b);
/// Fidelity of the normalized ensemble with the pure state b.
double fidelity(const BranchMix& a, const PureState& b);
double fidelity(const DensityMatrix& rho, const PureState& b);

/// arg <target|psi>, the global phase separating psi from target.
double global_phase(const PureState& psi, const PureState& target);

nlohmann::json to_json(const PureState& s);
PureState pure_state_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GraphSpec& g);
GraphSpec graph_from_json(const nlohmann::json& j);

/// Throws CapExceeded above kMaxQubits.
void check_qubit_cap(int num_qubits, int cap = kMaxQubits);

}  // namespace graphcarve
