#include "dcekit/predicate.hpp"

#include <cctype>
#include <charconv>
#include <vector>

#include "dcekit/error.hpp"
#include "dcekit/serialize.hpp"

namespace dce {

struct Predicate::Node {
  enum class Kind { True, Compare, And, Or, Not };
  Kind kind = Kind::True;
  std::string trait;
  CompareOp op = CompareOp::Eq;
  TraitValue value;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Predicate::Node>;

bool compare_values(const TraitValue& actual, CompareOp op, const TraitValue& expected) {
  if (actual.index() != expected.index()) return op == CompareOp::Ne;
  auto apply = [op](const auto& a, const auto& b) {
    switch (op) {
      case CompareOp::Eq: return a == b;
      case CompareOp::Ne: return a != b;
      case CompareOp::Lt: return a < b;
      case CompareOp::Le: return a <= b;
      case CompareOp::Gt: return a > b;
      case CompareOp::Ge: return a >= b;
    }
    return false;
  };
  if (const double* a = std::get_if<double>(&actual)) return apply(*a, std::get<double>(expected));
  return apply(std::get<std::string>(actual), std::get<std::string>(expected));
}

bool evaluate(const Predicate::Node& n, const Respondent& r) {
  using K = Predicate::Node::Kind;
  switch (n.kind) {
    case K::True: return true;
    case K::Compare: {
      auto it = r.traits.find(n.trait);
      if (it == r.traits.end()) return false;
      return compare_values(it->second, n.op, n.value);
    }
    case K::And: return evaluate(*n.lhs, r) && evaluate(*n.rhs, r);
    case K::Or: return evaluate(*n.lhs, r) || evaluate(*n.rhs, r);
    case K::Not: return !evaluate(*n.lhs, r);
  }
  return false;
}

void collect(const Predicate::Node& n, std::set<std::string>& out) {
  if (n.kind == Predicate::Node::Kind::Compare) out.insert(n.trait);
  if (n.lhs) collect(*n.lhs, out);
  if (n.rhs) collect(*n.rhs, out);
}

std::string_view op_text(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "==";
    case CompareOp::Ne: return "!=";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
  }
  return "==";
}

std::string render(const Predicate::Node& n) {
  using K = Predicate::Node::Kind;
  switch (n.kind) {
    case K::True: return "true";
    case K::Compare: {
      std::string v;
      if (const double* d = std::get_if<double>(&n.value)) v = format_double(*d);
      else v = "\"" + std::get<std::string>(n.value) + "\"";
      return n.trait + " " + std::string(op_text(n.op)) + " " + v;
    }
    case K::And: return "(" + render(*n.lhs) + " && " + render(*n.rhs) + ")";
    case K::Or: return "(" + render(*n.lhs) + " || " + render(*n.rhs) + ")";
    case K::Not: return "!" + render(*n.lhs);
  }
  return "true";
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    NodePtr n = parse_or();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(text_.substr(pos_)) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError, "subgroup predicate: " + what);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view token) {
    skip_space();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  static NodePtr binary(Predicate::Node::Kind kind, NodePtr lhs, NodePtr rhs) {
    auto n = std::make_shared<Predicate::Node>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
  }

  NodePtr parse_or() {
    NodePtr lhs = parse_and();
    while (accept("||")) lhs = binary(Predicate::Node::Kind::Or, lhs, parse_and());
    return lhs;
  }

  NodePtr parse_and() {
    NodePtr lhs = parse_unary();
    while (accept("&&")) lhs = binary(Predicate::Node::Kind::And, lhs, parse_unary());
    return lhs;
  }

  NodePtr parse_unary() {
    skip_space();
    if (text_.substr(pos_, 2) != "!=" && accept("!"))
      return binary(Predicate::Node::Kind::Not, parse_unary(), nullptr);
    if (accept("(")) {
      NodePtr n = parse_or();
      if (!accept(")")) fail("missing ')'");
      return n;
    }
    return parse_comparison();
  }

  std::string identifier() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (start == pos_) fail("expected a trait name");
    return std::string(text_.substr(start, pos_ - start));
  }

  TraitValue literal() {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '"') {
      const std::size_t close = text_.find('"', pos_ + 1);
      if (close == std::string_view::npos) fail("unterminated string");
      std::string s(text_.substr(pos_ + 1, close - pos_ - 1));
      pos_ = close + 1;
      return s;
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc()) fail("expected a number or quoted string");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  NodePtr parse_comparison() {
    std::string name = identifier();
    if (name == "true") return std::make_shared<Predicate::Node>();
    CompareOp op;
    if (accept("==")) op = CompareOp::Eq;
    else if (accept("!=")) op = CompareOp::Ne;
    else if (accept("<=")) op = CompareOp::Le;
    else if (accept(">=")) op = CompareOp::Ge;
    else if (accept("<")) op = CompareOp::Lt;
    else if (accept(">")) op = CompareOp::Gt;
    else fail("expected a comparison operator after '" + name + "'");
    auto n = std::make_shared<Predicate::Node>();
    n->kind = Predicate::Node::Kind::Compare;
    n->trait = std::move(name);
    n->op = op;
    n->value = literal();
    return n;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Predicate::Predicate() : node_(std::make_shared<Node>()) {}

Predicate Predicate::compare(std::string trait, CompareOp op, TraitValue value) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Compare;
  n->trait = std::move(trait);
  n->op = op;
  n->value = std::move(value);
  return Predicate(std::move(n));
}

Predicate Predicate::parse(std::string_view text) { return Predicate(Parser(text).parse()); }

bool Predicate::operator()(const Respondent& respondent) const { return evaluate(*node_, respondent); }

std::set<std::string> Predicate::referenced_traits() const {
  std::set<std::string> out;
  collect(*node_, out);
  return out;
}

std::string Predicate::to_string() const { return render(*node_); }

Predicate operator&&(const Predicate& lhs, const Predicate& rhs) {
  auto n = std::make_shared<Predicate::Node>();
  n->kind = Predicate::Node::Kind::And;
  n->lhs = lhs.node_;
  n->rhs = rhs.node_;
  return Predicate(std::move(n));
}

Predicate operator||(const Predicate& lhs, const Predicate& rhs) {
  auto n = std::make_shared<Predicate::Node>();
  n->kind = Predicate::Node::Kind::Or;
  n->lhs = lhs.node_;
  n->rhs = rhs.node_;
  return Predicate(std::move(n));
}

Predicate operator!(const Predicate& p) {
  auto n = std::make_shared<Predicate::Node>();
  n->kind = Predicate::Node::Kind::Not;
  n->lhs = p.node_;
  return Predicate(std::move(n));
}

PanelDataset filter_subgroup(const PanelDataset& dataset, const Predicate& predicate) {
  for (const auto& trait : predicate.referenced_traits())
    if (!dataset.has_trait(trait))
      throw Error(ErrorCode::UnknownTrait, "subgroup references undeclared trait '" + trait + "'");
  std::vector<Respondent> kept;
  for (const auto& r : dataset.respondents())
    if (predicate(r)) kept.push_back(r);
  ValidationOptions v;
  v.alternatives_per_task = 0;
  return PanelDataset(dataset.schema(), std::move(kept), dataset.trait_names(), v);
}

namespace {

Predicate agrees(std::string_view trait) {
  return Predicate::compare(std::string(trait), CompareOp::Ge, 4.0);
}

}  // namespace

Predicate consumer_group(char group) {
  switch (group) {
    case 'A': return Predicate::compare(std::string(traits::buys_sfsc), CompareOp::Eq, 1.0);
    case 'B': return Predicate::compare(std::string(traits::buys_sfsc), CompareOp::Eq, 0.0);
    case 'C': return agrees(traits::no_sfsc_at_supermarket);
    case 'D': return agrees(traits::sfsc_supports_farmers) && !agrees(traits::no_sfsc_at_supermarket);
    default:
      throw Error(ErrorCode::InvalidConfig, std::string("unknown consumer group '") + group + "'");
  }
}

Predicate farmer_group(int group) {
  switch (group) {
    case 1: return Predicate::compare(std::string(traits::sales_channels), CompareOp::Eq, std::string("CC"));
    case 2: return Predicate::compare(std::string(traits::sales_channels), CompareOp::Eq, std::string("CL"));
    case 3: return Predicate::compare(std::string(traits::sales_channels), CompareOp::Eq, std::string("CC/CL"));
    case 4: return agrees(traits::prefers_selling_sfsc);
    default:
      throw Error(ErrorCode::InvalidConfig, "unknown farmer group " + std::to_string(group));
  }
}

Predicate subgroup_from_string(std::string_view text, Population population) {
  if (text.size() == 1) {
    const char c = text[0];
    if (population == Population::Consumer && c >= 'A' && c <= 'D') return consumer_group(c);
    if (population == Population::Farmer && c >= '1' && c <= '4') return farmer_group(c - '0');
  }
  return Predicate::parse(text);
}

}  // namespace dce
