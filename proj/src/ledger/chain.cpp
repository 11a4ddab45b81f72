#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "veritas/ledger.hpp"

namespace veritas::ledger {

namespace {

constexpr char kUnit = '\x1F';

constexpr std::string_view kOpNames[] = {"insert", "contract", "revise", "recovery", "trace-seal", "meta"};

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

template <typename T>
std::optional<T> number(std::string_view s) {
  T v{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

VerifyResult bad(std::uint64_t index, std::string reason) { return {false, index, std::move(reason)}; }

std::optional<VerifyResult> check_link(const Block& b, std::uint64_t position, const Digest& prev_h) {
  if (b.index != position) {
    return bad(position, "index " + std::to_string(b.index) + " at position " + std::to_string(position));
  }
  if (b.h_prev != prev_h) return bad(position, "h_prev does not match previous block hash");
  if (compute_hash(b) != b.h) return bad(position, "stored hash does not match block contents");
  return std::nullopt;
}

[[noreturn]] void sys_fail(const std::string& what) {
  throw LedgerError(what + ": " + std::strerror(errno));
}

}  // namespace

std::string_view op_name(Op op) { return kOpNames[static_cast<int>(op)]; }

std::optional<Op> op_from_name(std::string_view name) {
  for (int i = 0; i < 6; ++i) {
    if (kOpNames[i] == name) return static_cast<Op>(i);
  }
  return std::nullopt;
}

std::string preimage(const Block& b) {
  std::string out = std::to_string(b.index);
  out += kUnit;
  out += std::to_string(b.timestamp);
  out += kUnit;
  out += op_name(b.op);
  out += kUnit;
  out += b.formula;
  out += kUnit;
  out += to_hex(b.justification);
  out += kUnit;
  out += to_hex(b.h_prev);
  return out;
}

Digest compute_hash(const Block& b) { return sha256(preimage(b)); }

std::string serialize(const Block& b) { return preimage(b) + kUnit + to_hex(b.h) + '\n'; }

std::optional<Block> parse_block(std::string_view line) {
  auto f = split(line, kUnit);
  if (f.size() != 7) return std::nullopt;
  Block b;
  auto index = number<std::uint64_t>(f[0]);
  auto ts = number<std::int64_t>(f[1]);
  auto op = op_from_name(f[2]);
  auto jd = digest_from_hex(f[4]);
  auto hp = digest_from_hex(f[5]);
  auto h = digest_from_hex(f[6]);
  if (!index || !ts || !op || !jd || !hp || !h) return std::nullopt;
  b.index = *index;
  b.timestamp = *ts;
  b.op = *op;
  b.formula = std::string(f[3]);
  b.justification = *jd;
  b.h_prev = *hp;
  b.h = *h;
  std::string again = serialize(b);
  if (std::string_view(again).substr(0, again.size() - 1) != line) return std::nullopt;
  return b;
}

VerifyResult verify_chain(std::span<const Block> blocks) {
  Digest prev = kZeroDigest;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (auto r = check_link(blocks[i], i, prev)) return *r;
    prev = blocks[i].h;
  }
  return {};
}

VerifyResult verify_text(std::string_view text) {
  if (text.empty()) return {};
  auto lines = split(text, '\n');
  // A well-formed file ends in a newline, leaving one empty trailing field.
  bool terminated = lines.back().empty();
  if (terminated) lines.pop_back();
  Digest prev = kZeroDigest;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!terminated && i + 1 == lines.size()) return bad(i, "unterminated record");
    auto b = parse_block(lines[i]);
    if (!b) return bad(i, "malformed record");
    if (auto r = check_link(*b, i, prev)) return *r;
    prev = b->h;
  }
  return {};
}

Ledger Ledger::from_text(std::string_view text) {
  VerifyResult v = verify_text(text);
  if (!v.ok) throw CorruptLedger(*v.first_bad, v.reason);
  Ledger l;
  auto lines = split(text, '\n');
  for (auto line : lines) {
    if (!line.empty()) l.blocks_.push_back(*parse_block(line));
  }
  return l;
}

Ledger Ledger::open(const std::filesystem::path& path) {
  int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) sys_fail("cannot open ledger " + path.string());
  if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd);
    throw LedgerError("ledger " + path.string() + " is in use by another writer");
  }
  std::string text;
  char buf[1 << 16];
  if (::lseek(fd, 0, SEEK_SET) < 0) {
    ::close(fd);
    sys_fail("cannot seek ledger");
  }
  for (;;) {
    ssize_t n = ::read(fd, buf, sizeof(buf));
    if (n < 0) {
      ::close(fd);
      sys_fail("cannot read ledger");
    }
    if (n == 0) break;
    text.append(buf, static_cast<std::size_t>(n));
  }
  Ledger l;
  try {
    l = from_text(text);
  } catch (...) {
    ::close(fd);
    throw;
  }
  l.path_ = path;
  l.fd_ = fd;
  return l;
}

Ledger::Ledger(Ledger&& other) noexcept
    : blocks_(std::move(other.blocks_)), path_(std::move(other.path_)), fd_(other.fd_) {
  other.fd_ = -1;
}

Ledger& Ledger::operator=(Ledger&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    blocks_ = std::move(other.blocks_);
    path_ = std::move(other.path_);
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

Ledger::~Ledger() {
  if (fd_ >= 0) ::close(fd_);
}

const Block& Ledger::append(std::int64_t timestamp, Op op, std::string formula, const Digest& justification) {
  if (formula.empty() ? op != Op::meta : logic::render_canonical(logic::parse(formula)) != formula) {
    throw std::invalid_argument("block formula must be a canonical rendering: '" + formula + "'");
  }
  if (timestamp < 0) throw std::invalid_argument("block timestamp must be non-negative");
  Block b;
  b.index = blocks_.size();
  b.timestamp = timestamp;
  b.op = op;
  b.formula = std::move(formula);
  b.justification = justification;
  b.h_prev = blocks_.empty() ? kZeroDigest : blocks_.back().h;
  b.h = compute_hash(b);
  if (fd_ >= 0) {
    std::string line = serialize(b);
    std::size_t done = 0;
    while (done < line.size()) {
      ssize_t n = ::write(fd_, line.data() + done, line.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        sys_fail("ledger write failed");
      }
      done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) sys_fail("ledger fsync failed");
  }
  blocks_.push_back(std::move(b));
  return blocks_.back();
}

bool Ledger::anchors(const Digest& d) const {
  for (const auto& b : blocks_) {
    if (b.justification == d) return true;
  }
  return false;
}

std::string Ledger::text() const {
  std::string out;
  for (const auto& b : blocks_) out += serialize(b);
  return out;
}

}  // namespace veritas::ledger
