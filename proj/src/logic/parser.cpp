#include "veritas/logic.hpp"

namespace veritas::logic {

namespace {

std::string join_expected(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += xs[i];
  }
  return out;
}

}  // namespace

ParseError::ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& found)
    : std::runtime_error("syntax error at offset " + std::to_string(offset) + ": expected one of {" +
                         join_expected(expected) + "}, found " + found),
      offset_(offset),
      expected_(std::move(expected)) {}

namespace {

enum class Tok { ident, bang, amp, bar, arrow, dbl_arrow, lparen, rparen, comma, end, invalid };

struct Token {
  Tok kind;
  std::size_t offset;
  std::string_view text;
};

const char* describe(Tok t) {
  switch (t) {
    case Tok::ident: return "identifier";
    case Tok::bang: return "'!'";
    case Tok::amp: return "'&'";
    case Tok::bar: return "'|'";
    case Tok::arrow: return "'->'";
    case Tok::dbl_arrow: return "'<->'";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::comma: return "','";
    case Tok::end: return "end of input";
    case Tok::invalid: return "invalid character";
  }
  return "?";
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto ident_char = [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  };
  while (i < s.size()) {
    char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z')) {
      std::size_t j = i + 1;
      while (j < s.size() && ident_char(s[j])) ++j;
      out.push_back({Tok::ident, i, s.substr(i, j - i)});
      i = j;
      continue;
    }
    switch (c) {
      case '!': out.push_back({Tok::bang, i, s.substr(i, 1)}); ++i; continue;
      case '&': out.push_back({Tok::amp, i, s.substr(i, 1)}); ++i; continue;
      case '|': out.push_back({Tok::bar, i, s.substr(i, 1)}); ++i; continue;
      case '(': out.push_back({Tok::lparen, i, s.substr(i, 1)}); ++i; continue;
      case ')': out.push_back({Tok::rparen, i, s.substr(i, 1)}); ++i; continue;
      case ',': out.push_back({Tok::comma, i, s.substr(i, 1)}); ++i; continue;
      case '-':
        if (i + 1 < s.size() && s[i + 1] == '>') {
          out.push_back({Tok::arrow, i, s.substr(i, 2)});
          i += 2;
          continue;
        }
        break;
      case '<':
        if (s.substr(i, 3) == "<->") {
          out.push_back({Tok::dbl_arrow, i, s.substr(i, 3)});
          i += 3;
          continue;
        }
        break;
      default:
        break;
    }
    // Lexing stops here; the parser reports the error with its own expectations.
    out.push_back({Tok::invalid, i, s.substr(i, 1)});
    return out;
  }
  out.push_back({Tok::end, s.size(), {}});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(lex(text)) {}

  Formula parse_all() {
    Formula f = parse_iff();
    if (peek().kind != Tok::end) {
      fail({"'<->'", "'->'", "'|'", "'&'", "end of input"});
    }
    return f;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& advance() { return tokens_[pos_++]; }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    const Token& t = peek();
    std::string found = t.kind == Tok::ident ? "identifier '" + std::string(t.text) + "'" : describe(t.kind);
    throw ParseError(t.offset, std::move(expected), found);
  }

  Formula parse_iff() {
    Formula lhs = parse_impl();
    while (peek().kind == Tok::dbl_arrow) {
      advance();
      lhs = iff(lhs, parse_impl());
    }
    return lhs;
  }

  Formula parse_impl() {
    Formula lhs = parse_or();
    if (peek().kind == Tok::arrow) {
      advance();
      return impl(lhs, parse_impl());
    }
    return lhs;
  }

  Formula parse_or() {
    Formula lhs = parse_and();
    while (peek().kind == Tok::bar) {
      advance();
      lhs = disj(lhs, parse_and());
    }
    return lhs;
  }

  Formula parse_and() {
    Formula lhs = parse_unary();
    while (peek().kind == Tok::amp) {
      advance();
      lhs = conj(lhs, parse_unary());
    }
    return lhs;
  }

  Formula parse_unary() {
    switch (peek().kind) {
      case Tok::bang:
        advance();
        return neg(parse_unary());
      case Tok::lparen: {
        advance();
        Formula inner = parse_iff();
        if (peek().kind != Tok::rparen) fail({"')'", "'<->'", "'->'", "'|'", "'&'"});
        advance();
        return inner;
      }
      case Tok::ident:
        return parse_atom();
      default:
        fail({"'!'", "'('", "identifier"});
    }
  }

  Formula parse_atom() {
    Atom a;
    a.predicate = std::string(advance().text);
    if (peek().kind != Tok::lparen) return Formula::make_atom(std::move(a));
    advance();
    for (;;) {
      if (peek().kind != Tok::ident) fail({"identifier"});
      a.args.emplace_back(advance().text);
      if (peek().kind == Tok::comma) {
        advance();
        continue;
      }
      if (peek().kind == Tok::rparen) {
        advance();
        break;
      }
      fail({"','", "')'"});
    }
    return Formula::make_atom(std::move(a));
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

Formula parse(std::string_view text) { return Parser(text).parse_all(); }

}  // namespace veritas::logic
