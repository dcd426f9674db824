#include "jetlab/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace jetlab {

namespace {

std::string join_expected(const std::vector<std::string>& expected,
                          const std::string& found) {
  std::ostringstream os;
  os << "expected ";
  for (size_t i = 0; i < expected.size(); ++i)
    os << (i ? " | " : "") << expected[i];
  os << ", found " << found;
  return os.str();
}

}  // namespace

SyntaxError::SyntaxError(int line_, int col_,
                         std::vector<std::string> expected_,
                         const std::string& found)
    : std::runtime_error("syntax error at " + std::to_string(line_) + ":" +
                         std::to_string(col_) + ": " +
                         join_expected(expected_, found)),
      line(line_),
      col(col_),
      expected(std::move(expected_)) {}

enum class Op {
  Num,
  VarX,
  VarR,
  VarP,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Neg,
  Exp,
  Sin,
  Cos,
  Abs,
  Sqrt,
  Min,
  Max,
};

struct Expression::Node {
  Op op;
  double num = 0.0;
  int index = 0;  // 1-based variable index
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_node(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

struct Token {
  enum Kind { Number, Ident, Sym, End } kind = End;
  std::string text;
  double num = 0.0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() &&
           (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
            src_[pos_] == '\r')) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = Token::End;
      tok_.text = "end of input";
      return;
    }
    char c = src_[pos_];
    if ((c >= '0' && c <= '9') || c == '.') {
      size_t start = pos_;
      const char* begin = src_.data() + pos_;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      size_t len = static_cast<size_t>(end - begin);
      if (len == 0) {
        tok_.kind = Token::Sym;
        tok_.text = std::string(1, c);
        bump(1);
        return;
      }
      tok_.kind = Token::Number;
      tok_.num = v;
      tok_.text = src_.substr(start, len);
      bump(len);
      return;
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_')) {
        ++pos_;
        ++col_;
      }
      tok_.kind = Token::Ident;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    tok_.kind = Token::Sym;
    tok_.text = std::string(1, c);
    bump(1);
  }

  void bump(size_t k) {
    pos_ += k;
    col_ += static_cast<int>(k);
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  NodePtr parse() {
    NodePtr e = expr();
    if (lex_.peek().kind != Token::End)
      fail({"operator", "end of input"});
    return e;
  }

 private:
  [[noreturn]] void fail(std::vector<std::string> expected) {
    const Token& t = lex_.peek();
    throw SyntaxError(t.line, t.col, std::move(expected), t.text);
  }

  bool accept_sym(const std::string& s) {
    if (lex_.peek().kind == Token::Sym && lex_.peek().text == s) {
      lex_.take();
      return true;
    }
    return false;
  }

  void expect_sym(const std::string& s) {
    if (!accept_sym(s)) fail({"'" + s + "'"});
  }

  NodePtr expr() {
    NodePtr e = term();
    for (;;) {
      if (accept_sym("+"))
        e = make_node(Op::Add, e, term());
      else if (accept_sym("-"))
        e = make_node(Op::Sub, e, term());
      else
        return e;
    }
  }

  NodePtr term() {
    NodePtr e = factor();
    for (;;) {
      if (accept_sym("*"))
        e = make_node(Op::Mul, e, factor());
      else if (accept_sym("/"))
        e = make_node(Op::Div, e, factor());
      else
        return e;
    }
  }

  // right-associative power binds tighter than unary minus on the left
  NodePtr factor() {
    if (accept_sym("-")) return make_node(Op::Neg, factor());
    NodePtr base = primary();
    if (accept_sym("^")) return make_node(Op::Pow, base, factor());
    return base;
  }

  NodePtr primary() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Number) {
      auto n = std::make_shared<Expression::Node>();
      n->op = Op::Num;
      n->num = lex_.take().num;
      return n;
    }
    if (t.kind == Token::Ident) return ident();
    if (t.kind == Token::Sym && t.text == "(") {
      lex_.take();
      NodePtr e = expr();
      expect_sym(")");
      return e;
    }
    fail({"number", "variable", "function", "'('"});
  }

  NodePtr ident() {
    Token t = lex_.take();
    const std::string& s = t.text;
    if (s == "r") return make_node(Op::VarR);
    if ((s[0] == 'x' || s[0] == 'p') && s.size() > 1) {
      bool digits = true;
      for (size_t i = 1; i < s.size(); ++i)
        digits = digits && s[i] >= '0' && s[i] <= '9';
      if (digits) {
        int idx = std::atoi(s.c_str() + 1);
        if (idx >= 1) {
          auto n = std::make_shared<Expression::Node>();
          n->op = s[0] == 'x' ? Op::VarX : Op::VarP;
          n->index = idx;
          return n;
        }
      }
    }
    Op op;
    int arity = 1;
    if (s == "exp")
      op = Op::Exp;
    else if (s == "sin")
      op = Op::Sin;
    else if (s == "cos")
      op = Op::Cos;
    else if (s == "abs")
      op = Op::Abs;
    else if (s == "sqrt")
      op = Op::Sqrt;
    else if (s == "min") {
      op = Op::Min;
      arity = 2;
    } else if (s == "max") {
      op = Op::Max;
      arity = 2;
    } else {
      throw SyntaxError(t.line, t.col,
                        {"variable x<k>/p<k>/r", "function name"}, s);
    }
    expect_sym("(");
    NodePtr a = expr();
    NodePtr b;
    if (arity == 2) {
      expect_sym(",");
      b = expr();
    }
    expect_sym(")");
    return make_node(op, a, b);
  }

  Lexer lex_;
};

double eval_node(const Expression::Node& n, const EvalContext& ctx) {
  switch (n.op) {
    case Op::Num:
      return n.num;
    case Op::VarX:
      if (n.index > static_cast<int>(ctx.x.size()))
        throw EvalError("variable x" + std::to_string(n.index) +
                        " not bound in this context");
      return ctx.x[n.index - 1];
    case Op::VarR:
      if (!ctx.r) throw EvalError("variable r not bound in this context");
      return *ctx.r;
    case Op::VarP:
      if (n.index > static_cast<int>(ctx.p.size()))
        throw EvalError("variable p" + std::to_string(n.index) +
                        " not bound in this context");
      return ctx.p[n.index - 1];
    case Op::Add:
      return eval_node(*n.a, ctx) + eval_node(*n.b, ctx);
    case Op::Sub:
      return eval_node(*n.a, ctx) - eval_node(*n.b, ctx);
    case Op::Mul:
      return eval_node(*n.a, ctx) * eval_node(*n.b, ctx);
    case Op::Div: {
      double d = eval_node(*n.b, ctx);
      if (d == 0.0) throw EvalError("division by zero");
      return eval_node(*n.a, ctx) / d;
    }
    case Op::Pow:
      return std::pow(eval_node(*n.a, ctx), eval_node(*n.b, ctx));
    case Op::Neg:
      return -eval_node(*n.a, ctx);
    case Op::Exp:
      return std::exp(eval_node(*n.a, ctx));
    case Op::Sin:
      return std::sin(eval_node(*n.a, ctx));
    case Op::Cos:
      return std::cos(eval_node(*n.a, ctx));
    case Op::Abs:
      return std::fabs(eval_node(*n.a, ctx));
    case Op::Sqrt: {
      double v = eval_node(*n.a, ctx);
      if (v < 0.0) throw EvalError("sqrt of a negative number");
      return std::sqrt(v);
    }
    case Op::Min:
      return std::min(eval_node(*n.a, ctx), eval_node(*n.b, ctx));
    case Op::Max:
      return std::max(eval_node(*n.a, ctx), eval_node(*n.b, ctx));
  }
  throw EvalError("corrupt expression node");
}

std::string print_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void print_node(const Expression::Node& n, std::string& out) {
  auto binary = [&](const char* sym) {
    out += '(';
    print_node(*n.a, out);
    out += ' ';
    out += sym;
    out += ' ';
    print_node(*n.b, out);
    out += ')';
  };
  auto call = [&](const char* name) {
    out += name;
    out += '(';
    print_node(*n.a, out);
    if (n.b) {
      out += ", ";
      print_node(*n.b, out);
    }
    out += ')';
  };
  switch (n.op) {
    case Op::Num:
      if (n.num < 0.0) {
        out += '(';
        out += print_number(n.num);
        out += ')';
      } else {
        out += print_number(n.num);
      }
      return;
    case Op::VarX:
      out += "x" + std::to_string(n.index);
      return;
    case Op::VarR:
      out += "r";
      return;
    case Op::VarP:
      out += "p" + std::to_string(n.index);
      return;
    case Op::Add:
      binary("+");
      return;
    case Op::Sub:
      binary("-");
      return;
    case Op::Mul:
      binary("*");
      return;
    case Op::Div:
      binary("/");
      return;
    case Op::Pow:
      binary("^");
      return;
    case Op::Neg:
      out += "(-";
      print_node(*n.a, out);
      out += ')';
      return;
    case Op::Exp:
      call("exp");
      return;
    case Op::Sin:
      call("sin");
      return;
    case Op::Cos:
      call("cos");
      return;
    case Op::Abs:
      call("abs");
      return;
    case Op::Sqrt:
      call("sqrt");
      return;
    case Op::Min:
      call("min");
      return;
    case Op::Max:
      call("max");
      return;
  }
}

void scan_vars(const Expression::Node& n, int& mx, int& mp, bool& r) {
  if (n.op == Op::VarX) mx = std::max(mx, n.index);
  if (n.op == Op::VarP) mp = std::max(mp, n.index);
  if (n.op == Op::VarR) r = true;
  if (n.a) scan_vars(*n.a, mx, mp, r);
  if (n.b) scan_vars(*n.b, mx, mp, r);
}

}  // namespace

Expression::Expression(std::shared_ptr<const Node> root)
    : root_(std::move(root)) {}

Expression Expression::parse(const std::string& src) {
  Parser p(src);
  return Expression(p.parse());
}

Expression Expression::constant(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Num;
  n->num = v;
  return Expression(n);
}

double Expression::eval(const EvalContext& ctx) const {
  return eval_node(*root_, ctx);
}

std::string Expression::str() const {
  std::string out;
  print_node(*root_, out);
  return out;
}

int Expression::max_x_index() const {
  int mx = 0, mp = 0;
  bool r = false;
  scan_vars(*root_, mx, mp, r);
  return mx;
}

int Expression::max_p_index() const {
  int mx = 0, mp = 0;
  bool r = false;
  scan_vars(*root_, mx, mp, r);
  return mp;
}

bool Expression::uses_r() const {
  int mx = 0, mp = 0;
  bool r = false;
  scan_vars(*root_, mx, mp, r);
  return r;
}

}  // namespace jetlab
