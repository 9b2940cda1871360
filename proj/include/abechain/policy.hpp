#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "abechain/group.hpp"
#include "abechain/hash.hpp"
#include "abechain/json.hpp"
#include "abechain/rng.hpp"

namespace abechain::policy {

// ---- formula AST ----

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  enum class Kind { kAnd, kOr, kLeaf };

  Kind kind = Kind::kLeaf;
  std::string label;                 // leaf only
  std::vector<FormulaPtr> children;  // gates only

  static FormulaPtr leaf(std::string label);
  static FormulaPtr make_and(std::vector<FormulaPtr> children);
  static FormulaPtr make_or(std::vector<FormulaPtr> children);

  std::vector<std::string> leaf_labels() const;  // in order, duplicates kept
  std::string to_text() const;                   // round-trips through parse_policy
};

// Grammar: expr := term ("OR" term)* ; term := factor ("AND" factor)* ;
// factor := IDENT | "(" expr ")". AND binds tighter than OR. Same-kind
// chains flatten to one n-ary node.
FormulaPtr parse_policy(const std::string& text);

// ---- threshold tree ----

// Gates are stored in pre-order; gate 0 is the root. OR = (1,n), AND = (n,n).
struct GateChild {
  bool is_gate = false;
  std::size_t gate_index = 0;  // when is_gate
  std::string label;           // when leaf
};

struct Gate {
  std::uint64_t threshold = 0;  // t, 1 <= t <= n
  std::vector<GateChild> children;

  std::uint64_t fanout() const { return children.size(); }  // n
};

struct ThresholdTree {
  std::vector<Gate> gates;

  std::size_t leaf_count() const;
  std::vector<std::string> leaf_labels() const;
};

// A single attribute compiles to a (1,1) root gate over one leaf.
ThresholdTree build_tree(const FormulaPtr& formula);

// Ground-truth threshold evaluation (Def. 4): a gate is satisfied when at
// least t of its n children are.
bool satisfies(const ThresholdTree& tree, const std::set<std::string>& attrs);

// ---- share matrix ----

struct MatrixRow {
  std::uint64_t t = 0;
  std::uint64_t n = 0;
  std::vector<std::uint64_t> shares;  // zero-padded to the matrix width
};

struct PolicyMatrix {
  std::uint64_t modulus = 0;
  std::size_t width = 0;                // widest fanout
  std::vector<MatrixRow> rows;          // rows[i] belongs to gates[i]
  // (row, column) -> attribute label for every leaf share position
  std::map<std::pair<std::size_t, std::size_t>, std::string> rho;

  // Hash input: rows in order, every field as a length-prefixed
  // minimal big-endian integer, phi_s appended last.
  Bytes canonical_bytes(const FieldElement& phi_s) const;
  Json rows_json() const;  // [[t, n, shares...], ...]
};

struct ShareAssignment {
  ThresholdTree tree;
  std::vector<FieldElement> gate_secrets;  // per gate, pre-order
  PolicyMatrix matrix;
  FieldElement phi_s;
};

// Root gets a random phi_s in [1, p); each (t,n) gate with secret s gets a
// random polynomial f(x) = s + a_1 x + ... + a_{t-1} x^{t-1} and child i
// receives f(i). A polynomial is redrawn if any share evaluates to zero,
// so zero never aliases padding.
ShareAssignment assign_shares(const ThresholdTree& tree, RandomStream& rng,
                              const GroupParams& params);

Digest32 compute_policy_id(const PolicyMatrix& matrix, const FieldElement& phi_s);

struct PolicyRecord {
  Digest32 policy_id{};
  PolicyMatrix matrix;
  ThresholdTree skeleton;
};

// P_HashID: the on-chain policy registry.
class PolicyRegistry {
 public:
  // Pushes iff the id is absent; returns (policy_id, inserted). phi_s is
  // used for the digest only and is not retained.
  std::pair<Digest32, bool> store(const PolicyMatrix& matrix, const ThresholdTree& skeleton,
                                  const FieldElement& phi_s);

  bool contains(const Digest32& id) const;
  const PolicyRecord* find(const Digest32& id) const;
  std::size_t size() const { return records_.size(); }
  const std::map<std::string, PolicyRecord>& records() const { return records_; }

 private:
  std::map<std::string, PolicyRecord> records_;  // keyed by hex id
};

std::pair<Digest32, bool> store_policy(const PolicyMatrix& matrix,
                                       const ThresholdTree& skeleton,
                                       const FieldElement& phi_s, PolicyRegistry& registry);

// ---- reconstruction ----

// Lagrange basis evaluated at x=0 for the given distinct points.
std::vector<FieldElement> lagrange_at_zero(const std::vector<std::uint64_t>& xs,
                                           std::uint64_t modulus);

// Interpolates the degree-(t-1) polynomial through the first t shares and
// returns its value at 0. Fewer than t shares -> InsufficientSharesError;
// duplicate or zero x -> InputError.
FieldElement reconstruct_secret(const std::vector<std::pair<std::uint64_t, FieldElement>>& shares,
                                std::uint64_t t);

// Recursive share-wise reconstruction using only positions whose leaf is
// in attrs: per gate, child values are gathered in order and the first t
// feed the interpolation. nullopt when the tree is not satisfied.
std::optional<FieldElement> reconstruct_from_labels(const PolicyMatrix& matrix,
                                                    const ThresholdTree& tree,
                                                    const std::set<std::string>& attrs);

}  // namespace abechain::policy
