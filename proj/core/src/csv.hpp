#pragma once

// Minimal RFC 4180 reader/writer: ',' delimiter, '"' quoting, LF or CRLF.

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dcekit/error.hpp"

namespace dce::csv {

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Reads one record. `line` receives the 1-based line where it starts.
  bool next(std::vector<std::string>& cells, std::size_t& line) {
    cells.clear();
    int c = in_.get();
    if (c == std::char_traits<char>::eof()) return false;
    line = ++line_;
    std::string cell;
    bool quoted = false;
    bool was_quoted = false;
    for (;; c = in_.get()) {
      if (c == std::char_traits<char>::eof()) {
        if (quoted) throw Error(ErrorCode::ParseError, "unterminated quote at line " + std::to_string(line));
        break;
      }
      const char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          if (in_.peek() == '"') {
            cell.push_back('"');
            in_.get();
          } else {
            quoted = false;
          }
        } else {
          if (ch == '\n') ++line_;
          cell.push_back(ch);
        }
        continue;
      }
      if (ch == '"' && cell.empty() && !was_quoted) {
        quoted = was_quoted = true;
      } else if (ch == ',') {
        cells.push_back(std::move(cell));
        cell.clear();
        was_quoted = false;
      } else if (ch == '\n') {
        break;
      } else if (ch == '\r') {
        if (in_.peek() == '\n') in_.get();
        break;
      } else {
        cell.push_back(ch);
      }
    }
    cells.push_back(std::move(cell));
    return true;
  }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

inline void write_cell(std::ostream& out, std::string_view cell) {
  if (cell.find_first_of(",\"\n\r") == std::string_view::npos) {
    out << cell;
    return;
  }
  out << '"';
  for (char ch : cell) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      write_cell(out_, cells[i]);
    }
    out_ << '\n';
  }

 private:
  std::ostream& out_;
};

}  // namespace dce::csv
