#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "graphcarve/carving.hpp"
#include "graphcarve/qstate.hpp"
#include "json.hpp"

namespace graphcarve {

enum class Strategy { TwoAtom, MultiAtom };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

// ------------------------------------------------------------------ steps

/// Prepares a fresh qubit in |+>.
struct InitPlus {
  int qubit = 0;
};
/// Pauli-X on every listed qubit. `block` ties the layer to an attach block
/// for factor bookkeeping (-1 for none).
struct XLayer {
  std::vector<int> qubits;
  int block = -1;
};
struct Carve {
  std::vector<int> subset;
  int block = -1;
};
struct RotY {
  int qubit = 0;
  double theta = 0.0;
};
struct RotZ {
  int qubit = 0;
};
/// Moves a qubit's |1> between the cavity-coupled level and the shelved one.
struct SetCoupling {
  int qubit = 0;
  bool on = false;
};

using ProtocolStep = std::variant<InitPlus, XLayer, Carve, RotY, RotZ, SetCoupling>;

/// Local masks below use bit i for position i of a block's subset list.
struct BlockInfo {
  std::string kind;  // "attach" or "multi-atom"
  std::vector<int> anchors;
  std::vector<int> new_qubits;
  std::vector<int> subset;
  std::vector<std::uint32_t> carve_masks;  // cumulative X mask at each carving
  std::string rotation;                    // final-frame note
};

struct ProtocolProgram {
  int num_qubits = 0;
  std::vector<ProtocolStep> steps;
  int n_carvings = 0;
  Strategy strategy = Strategy::TwoAtom;
  GraphSpec target;
  std::optional<PureState> target_state;  // replaces the graph state of `target` when set
  std::vector<BlockInfo> blocks;
};

// ------------------------------------------------------------------ compile

/// Even-parity masks over `width` positions in reflected-Gray order: starts
/// at zero, consecutive masks differ in exactly two positions, every
/// even-parity mask appears once.
std::vector<std::uint32_t> gray_even_parity_masks(int width);

struct AttachPlan {
  std::vector<int> anchors;
  int new_qubit = 0;
  std::vector<std::uint32_t> mask_order;  // over positions (anchors..., new)
  double theta = 0.0;
  bool z_after = false;
};

/// Plan for linking `new_qubit` to each anchor, with the final rotation
/// chosen by trial against the CZ circuit.
AttachPlan make_attach_plan(std::vector<int> anchors, int new_qubit);

std::vector<ProtocolStep> compile_attach(const AttachPlan& plan, int block = -1);

/// Vertex order with each vertex's already-placed neighbours: start at the
/// lowest unplaced index of each component, then repeatedly take the frontier
/// vertex with the fewest placed neighbours (lowest index on ties).
std::vector<std::pair<int, std::vector<int>>> attach_order(const GraphSpec& g);

ProtocolProgram compile_graph(const GraphSpec& g, Strategy strategy);

/// Bell-pair carving: |++>, carve, X on both, carve, X on both. The target
/// state is (|01> + |10>)/sqrt2.
ProtocolProgram bell_carving_program();

/// Throws InvalidArgument when n_carvings disagrees with the steps or an
/// attach block breaks the two-flip rule between consecutive carvings.
void check_program(const ProtocolProgram& prog);

nlohmann::json to_json(const ProtocolProgram& prog);
ProtocolProgram program_from_json(const nlohmann::json& j);

// ------------------------------------------------------- multi-atom block

enum class LocalGate { I, X, Z, RyPlus, RyMinus };

std::string to_string(LocalGate g);
LocalGate local_gate_from_string(const std::string& s);

/// Three-qubit block extending a path by two vertices: positions are
/// (anchor, first new, second new). The carvings remove the patterns of the
/// subgroup ker(functional) of the 3-bit pattern group.
struct MultiAtomBlock {
  std::array<LocalGate, 3> pre{};
  std::uint32_t functional = 0;
  std::vector<std::uint32_t> carve_masks;
  std::array<LocalGate, 3> post{};

  friend bool operator==(const MultiAtomBlock&, const MultiAtomBlock&) = default;
};

/// Exhaustive search over pre/post gates and the seven order-4 subgroups,
/// returning the first schedule with ideal fidelity 1 and probability 1/2.
MultiAtomBlock search_multi_atom_block();

/// The frozen search result used by compile_graph.
const MultiAtomBlock& multi_atom_block();

/// True iff the block, run ideally on path(2) plus two fresh qubits, yields
/// path(4) with fidelity >= 1 - 1e-10 and probability 1/2.
bool verify_multi_atom_block(const MultiAtomBlock& block);

nlohmann::json to_json(const MultiAtomBlock& b);
MultiAtomBlock multi_atom_block_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------- execute

/// Reflection factors accumulated over one block, keyed by the local pattern
/// in the frame at the start of the block.
struct BlockLedger {
  int block = -1;
  std::vector<int> subset;
  std::map<std::uint32_t, complex> factors;
  std::vector<std::uint32_t> carved;  // cumulative masks at each carving
  /// max |f| / min |f| - 1 over the patterns the block keeps.
  double survivor_spread() const;
};

enum class Backend { Auto, Pure, Density };

struct ExecutionResult {
  std::optional<PureState> pure;
  std::optional<DensityMatrix> mixed;
  double probability = 1.0;
  std::vector<double> p_clicks;
  std::vector<BlockLedger> ledgers;
};

/// Runs the steps. Auto picks the pure backend for single-photon probes and
/// the density backend otherwise.
ExecutionResult execute(const ProtocolProgram& prog, const ReflectionModel& model,
                        const ProbePolicy& policy, Backend backend = Backend::Auto);

struct RunReport {
  double probability = 0.0;
  double ideal_probability = 0.0;
  double fidelity = 0.0;
  std::optional<double> global_phase;
  int n_carvings = 0;
  std::vector<double> p_clicks;
  std::vector<BlockLedger> ledgers;
  std::vector<std::string> warnings;
  Strategy strategy = Strategy::TwoAtom;
  ProbePolicy policy;
};

RunReport run_program(const ProtocolProgram& prog, const ReflectionModel& model,
                      const ProbePolicy& policy);

nlohmann::json to_json(const RunReport& r);

}  // namespace graphcarve
