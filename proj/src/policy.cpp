#include "abechain/policy.hpp"

#include <algorithm>
#include <cctype>

#include "abechain/errors.hpp"

namespace abechain::policy {

// ---- formula ----

FormulaPtr Formula::leaf(std::string label) {
  auto f = std::make_shared<Formula>();
  f->kind = Kind::kLeaf;
  f->label = std::move(label);
  return f;
}

FormulaPtr Formula::make_and(std::vector<FormulaPtr> children) {
  if (children.empty()) throw InputError("AND node needs at least one child");
  if (children.size() == 1) return children.front();
  auto f = std::make_shared<Formula>();
  f->kind = Kind::kAnd;
  f->children = std::move(children);
  return f;
}

FormulaPtr Formula::make_or(std::vector<FormulaPtr> children) {
  if (children.empty()) throw InputError("OR node needs at least one child");
  if (children.size() == 1) return children.front();
  auto f = std::make_shared<Formula>();
  f->kind = Kind::kOr;
  f->children = std::move(children);
  return f;
}

static void collect_labels(const Formula& f, std::vector<std::string>& out) {
  if (f.kind == Formula::Kind::kLeaf) {
    out.push_back(f.label);
    return;
  }
  for (const auto& c : f.children) collect_labels(*c, out);
}

std::vector<std::string> Formula::leaf_labels() const {
  std::vector<std::string> out;
  collect_labels(*this, out);
  return out;
}

std::string Formula::to_text() const {
  if (kind == Kind::kLeaf) return label;
  std::string joiner = kind == Kind::kAnd ? " AND " : " OR ";
  std::string out;
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (i > 0) out += joiner;
    const Formula& c = *children[i];
    bool needs_parens = c.kind != Kind::kLeaf;
    if (needs_parens) out += "(";
    out += c.to_text();
    if (needs_parens) out += ")";
  }
  return out;
}

// ---- parser ----

namespace {

struct Token {
  enum class Kind { kIdent, kAnd, kOr, kLParen, kRParen, kEnd };
  Kind kind;
  std::string text;
  std::size_t offset;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::size_t start = pos_;
    if (pos_ >= text_.size()) return {Token::Kind::kEnd, "", start};
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      return {Token::Kind::kLParen, "(", start};
    }
    if (c == ')') {
      ++pos_;
      return {Token::Kind::kRParen, ")", start};
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string word = text_.substr(start, pos_ - start);
      if (word == "AND") return {Token::Kind::kAnd, word, start};
      if (word == "OR") return {Token::Kind::kOr, word, start};
      return {Token::Kind::kIdent, word, start};
    }
    throw ParseError("unknown token '" + std::string(1, c) + "'", start);
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : lexer_(text) { advance(); }

  FormulaPtr parse() {
    FormulaPtr f = expr();
    if (current_.kind != Token::Kind::kEnd)
      throw ParseError("unexpected token '" + current_.text + "'", current_.offset);
    return f;
  }

 private:
  void advance() { current_ = lexer_.next(); }

  FormulaPtr expr() {
    std::vector<FormulaPtr> terms;
    terms.push_back(term());
    while (current_.kind == Token::Kind::kOr) {
      advance();
      terms.push_back(term());
    }
    return Formula::make_or(std::move(terms));
  }

  FormulaPtr term() {
    std::vector<FormulaPtr> factors;
    factors.push_back(factor());
    while (current_.kind == Token::Kind::kAnd) {
      advance();
      factors.push_back(factor());
    }
    return Formula::make_and(std::move(factors));
  }

  FormulaPtr factor() {
    if (current_.kind == Token::Kind::kIdent) {
      FormulaPtr f = Formula::leaf(current_.text);
      advance();
      return f;
    }
    if (current_.kind == Token::Kind::kLParen) {
      advance();
      FormulaPtr f = expr();
      if (current_.kind != Token::Kind::kRParen)
        throw ParseError("expected ')'", current_.offset);
      advance();
      return f;
    }
    throw ParseError("expected attribute or '('", current_.offset);
  }

  Lexer lexer_;
  Token current_{Token::Kind::kEnd, "", 0};
};

}  // namespace

FormulaPtr parse_policy(const std::string& text) { return Parser(text).parse(); }

// ---- threshold tree ----

namespace {

// Appends the gate for formula f and returns its index. Leaves are not
// gates; callers attach them directly.
std::size_t append_gate(ThresholdTree& tree, const Formula& f) {
  std::size_t index = tree.gates.size();
  tree.gates.emplace_back();
  std::vector<GateChild> children;
  children.reserve(f.children.size());
  for (const auto& child : f.children) {
    GateChild gc;
    if (child->kind == Formula::Kind::kLeaf) {
      gc.is_gate = false;
      gc.label = child->label;
    } else {
      gc.is_gate = true;
      gc.gate_index = append_gate(tree, *child);
    }
    children.push_back(std::move(gc));
  }
  std::uint64_t n = children.size();
  tree.gates[index].threshold = f.kind == Formula::Kind::kOr ? 1 : n;
  tree.gates[index].children = std::move(children);
  return index;
}

}  // namespace

ThresholdTree build_tree(const FormulaPtr& formula) {
  if (!formula) throw InputError("null formula");
  ThresholdTree tree;
  if (formula->kind == Formula::Kind::kLeaf) {
    Gate root;
    root.threshold = 1;
    GateChild leaf;
    leaf.label = formula->label;
    root.children.push_back(std::move(leaf));
    tree.gates.push_back(std::move(root));
    return tree;
  }
  append_gate(tree, *formula);
  return tree;
}

std::size_t ThresholdTree::leaf_count() const {
  std::size_t count = 0;
  for (const auto& gate : gates)
    for (const auto& child : gate.children)
      if (!child.is_gate) ++count;
  return count;
}

std::vector<std::string> ThresholdTree::leaf_labels() const {
  std::vector<std::string> out;
  for (const auto& gate : gates)
    for (const auto& child : gate.children)
      if (!child.is_gate) out.push_back(child.label);
  return out;
}

namespace {

bool gate_satisfied(const ThresholdTree& tree, std::size_t index,
                    const std::set<std::string>& attrs) {
  const Gate& gate = tree.gates[index];
  std::uint64_t hits = 0;
  for (const auto& child : gate.children) {
    bool ok = child.is_gate ? gate_satisfied(tree, child.gate_index, attrs)
                            : attrs.count(child.label) > 0;
    if (ok) ++hits;
  }
  return hits >= gate.threshold;
}

}  // namespace

bool satisfies(const ThresholdTree& tree, const std::set<std::string>& attrs) {
  if (tree.gates.empty()) return false;
  return gate_satisfied(tree, 0, attrs);
}

// ---- share assignment ----

namespace {

// Evaluates s + a_1 x + ... + a_{t-1} x^{t-1} mod p by Horner.
std::uint64_t eval_poly(std::uint64_t s, const std::vector<std::uint64_t>& coeffs,
                        std::uint64_t x, std::uint64_t p) {
  std::uint64_t acc = 0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
    acc = (mulmod_u64(acc, x, p) + *it) % p;
  acc = (mulmod_u64(acc, x, p) + s) % p;
  return acc;
}

void assign_gate(const ThresholdTree& tree, std::size_t index, std::uint64_t secret,
                 RandomStream& rng, std::uint64_t p,
                 std::vector<std::uint64_t>& gate_secrets,
                 std::vector<std::vector<std::uint64_t>>& gate_shares) {
  const Gate& gate = tree.gates[index];
  gate_secrets[index] = secret;
  std::uint64_t t = gate.threshold;
  std::uint64_t n = gate.fanout();

  std::vector<std::uint64_t> shares(n, 0);
  for (;;) {
    std::vector<std::uint64_t> coeffs;
    for (std::uint64_t i = 0; i + 1 < t; ++i) coeffs.push_back(rng.uniform(0, p));
    bool zero_share = false;
    for (std::uint64_t x = 1; x <= n; ++x) {
      shares[x - 1] = eval_poly(secret, coeffs, x, p);
      if (shares[x - 1] == 0) zero_share = true;
    }
    if (!zero_share) break;  // zero is reserved for padding
  }
  gate_shares[index] = shares;

  for (std::size_t j = 0; j < gate.children.size(); ++j) {
    const GateChild& child = gate.children[j];
    if (child.is_gate)
      assign_gate(tree, child.gate_index, shares[j], rng, p, gate_secrets, gate_shares);
  }
}

}  // namespace

ShareAssignment assign_shares(const ThresholdTree& tree, RandomStream& rng,
                              const GroupParams& params) {
  if (tree.gates.empty()) throw InputError("empty threshold tree");
  std::uint64_t p = params.prime();

  std::uint64_t phi_s = rng.uniform(1, p);
  std::vector<std::uint64_t> gate_secrets(tree.gates.size(), 0);
  std::vector<std::vector<std::uint64_t>> gate_shares(tree.gates.size());
  assign_gate(tree, 0, phi_s, rng, p, gate_secrets, gate_shares);

  PolicyMatrix matrix;
  matrix.modulus = p;
  for (const auto& gate : tree.gates) matrix.width = std::max<std::size_t>(matrix.width, gate.fanout());
  for (std::size_t i = 0; i < tree.gates.size(); ++i) {
    MatrixRow row;
    row.t = tree.gates[i].threshold;
    row.n = tree.gates[i].fanout();
    row.shares = gate_shares[i];
    row.shares.resize(matrix.width, 0);
    matrix.rows.push_back(std::move(row));
    for (std::size_t j = 0; j < tree.gates[i].children.size(); ++j)
      if (!tree.gates[i].children[j].is_gate)
        matrix.rho[{i, j}] = tree.gates[i].children[j].label;
  }

  ShareAssignment out{tree, {}, std::move(matrix), FieldElement(phi_s, p)};
  out.gate_secrets.reserve(gate_secrets.size());
  for (std::uint64_t s : gate_secrets) out.gate_secrets.emplace_back(s, p);
  return out;
}

Bytes PolicyMatrix::canonical_bytes(const FieldElement& phi_s) const {
  Bytes out;
  for (const auto& row : rows) {
    append_len_prefixed_uint(out, row.t);
    append_len_prefixed_uint(out, row.n);
    for (std::uint64_t s : row.shares) append_len_prefixed_uint(out, s);
  }
  append_len_prefixed_uint(out, phi_s.value());
  return out;
}

Json PolicyMatrix::rows_json() const {
  Json rows_out = Json::array();
  for (const auto& row : rows) {
    Json r = Json::array();
    r.push_back(row.t);
    r.push_back(row.n);
    for (std::uint64_t s : row.shares) r.push_back(s);
    rows_out.push_back(std::move(r));
  }
  return rows_out;
}

Digest32 compute_policy_id(const PolicyMatrix& matrix, const FieldElement& phi_s) {
  return sha256(matrix.canonical_bytes(phi_s));
}

std::pair<Digest32, bool> PolicyRegistry::store(const PolicyMatrix& matrix,
                                                const ThresholdTree& skeleton,
                                                const FieldElement& phi_s) {
  Digest32 id = compute_policy_id(matrix, phi_s);
  std::string key = digest_hex(id);
  if (records_.count(key)) return {id, false};
  records_[key] = PolicyRecord{id, matrix, skeleton};
  return {id, true};
}

bool PolicyRegistry::contains(const Digest32& id) const {
  return records_.count(digest_hex(id)) > 0;
}

const PolicyRecord* PolicyRegistry::find(const Digest32& id) const {
  auto it = records_.find(digest_hex(id));
  return it == records_.end() ? nullptr : &it->second;
}

std::pair<Digest32, bool> store_policy(const PolicyMatrix& matrix,
                                       const ThresholdTree& skeleton,
                                       const FieldElement& phi_s, PolicyRegistry& registry) {
  return registry.store(matrix, skeleton, phi_s);
}

// ---- reconstruction ----

std::vector<FieldElement> lagrange_at_zero(const std::vector<std::uint64_t>& xs,
                                           std::uint64_t modulus) {
  std::vector<FieldElement> coeffs;
  coeffs.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    FieldElement num(1, modulus), den(1, modulus);
    FieldElement xi(xs[i], modulus);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (j == i) continue;
      FieldElement xj(xs[j], modulus);
      num = num * xj;
      den = den * (xj - xi);
    }
    coeffs.push_back(num * den.inv());
  }
  return coeffs;
}

FieldElement reconstruct_secret(
    const std::vector<std::pair<std::uint64_t, FieldElement>>& shares, std::uint64_t t) {
  if (t == 0) throw InputError("threshold must be at least 1");
  if (shares.size() < t)
    throw InsufficientSharesError("need " + std::to_string(t) + " shares, got " +
                                  std::to_string(shares.size()));
  std::set<std::uint64_t> seen;
  for (const auto& [x, y] : shares) {
    if (x == 0) throw InputError("share x-coordinate must be nonzero");
    if (!seen.insert(x).second) throw InputError("duplicate share x-coordinate");
  }
  std::uint64_t modulus = shares.front().second.modulus();
  std::vector<std::uint64_t> xs;
  xs.reserve(t);
  for (std::uint64_t i = 0; i < t; ++i) xs.push_back(shares[i].first);
  std::vector<FieldElement> lambda = lagrange_at_zero(xs, modulus);
  FieldElement acc(0, modulus);
  for (std::uint64_t i = 0; i < t; ++i) acc = acc + lambda[i] * shares[i].second;
  return acc;
}

namespace {

std::optional<FieldElement> reconstruct_gate(const PolicyMatrix& matrix,
                                             const ThresholdTree& tree, std::size_t index,
                                             const std::set<std::string>& attrs) {
  const Gate& gate = tree.gates[index];
  const MatrixRow& row = matrix.rows[index];
  std::vector<std::pair<std::uint64_t, FieldElement>> available;
  for (std::size_t j = 0; j < gate.children.size(); ++j) {
    const GateChild& child = gate.children[j];
    if (child.is_gate) {
      auto v = reconstruct_gate(matrix, tree, child.gate_index, attrs);
      if (v) available.emplace_back(j + 1, *v);
    } else if (attrs.count(child.label)) {
      available.emplace_back(j + 1, FieldElement(row.shares[j], matrix.modulus));
    }
    if (available.size() == gate.threshold) break;  // first t children in order
  }
  if (available.size() < gate.threshold) return std::nullopt;
  return reconstruct_secret(available, gate.threshold);
}

}  // namespace

std::optional<FieldElement> reconstruct_from_labels(const PolicyMatrix& matrix,
                                                    const ThresholdTree& tree,
                                                    const std::set<std::string>& attrs) {
  if (tree.gates.empty() || matrix.rows.size() != tree.gates.size()) return std::nullopt;
  return reconstruct_gate(matrix, tree, 0, attrs);
}

}  // namespace abechain::policy
