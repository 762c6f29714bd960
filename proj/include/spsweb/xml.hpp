/*
Copyright 2026 The spsweb Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef SPSWEB_XML_HPP
#define SPSWEB_XML_HPP

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spsweb/errors.hpp"

// Minimal XML reader/writer for the service's own vocabularies. Namespace
// prefixes are treated literally (both ends of the wire agree on them);
// DTDs, processing instructions beyond the declaration, and mixed content
// are out of scope.

namespace spsweb::xml {

struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::string text;  // concatenated character data

  Element() = default;
  explicit Element(std::string n) : name(std::move(n)) {}

  Element& set_attr(std::string key, std::string value) {
    for (auto& kv : attributes) {
      if (kv.first == key) {
        kv.second = std::move(value);
        return *this;
      }
    }
    attributes.emplace_back(std::move(key), std::move(value));
    return *this;
  }

  Element& set_text(std::string t) {
    text = std::move(t);
    return *this;
  }

  Element& add_child(Element child) {
    children.push_back(std::move(child));
    return children.back();
  }

  const std::string* attr(std::string_view key) const noexcept {
    for (const auto& kv : attributes) {
      if (kv.first == key) return &kv.second;
    }
    return nullptr;
  }

  std::string attr_or(std::string_view key, std::string fallback) const {
    const std::string* v = attr(key);
    return v ? *v : fallback;
  }

  const std::string& required_attr(std::string_view key) const {
    const std::string* v = attr(key);
    if (!v) {
      throw SpsError(Errc::SchemaError,
                     "missing attribute '" + std::string(key) + "'", name);
    }
    return *v;
  }

  const Element* child(std::string_view child_name) const noexcept {
    for (const auto& c : children) {
      if (c.name == child_name) return &c;
    }
    return nullptr;
  }

  const Element& required_child(std::string_view child_name) const {
    const Element* c = child(child_name);
    if (!c) {
      throw SpsError(Errc::SchemaError,
                     "missing element <" + std::string(child_name) + ">", name);
    }
    return *c;
  }

  std::vector<const Element*> children_named(std::string_view child_name) const {
    std::vector<const Element*> out;
    for (const auto& c : children) {
      if (c.name == child_name) out.push_back(&c);
    }
    return out;
  }
};

inline std::string escape(std::string_view raw, bool for_attribute) {
  std::string out;
  out.reserve(raw.size());
  for (const char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (for_attribute) {
          out += "&quot;";
        } else {
          out += c;
        }
        break;
      default: out += c;
    }
  }
  return out;
}

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view doc) : doc_(doc) {}

  Element parse_document() {
    skip_prolog();
    Element root = parse_element();
    skip_misc();
    if (pos_ != doc_.size()) fail("content after document root");
    return root;
  }

 private:
  std::string_view doc_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw SpsError(Errc::InvalidRequest, "XML parse error: " + what,
                   "byte:" + std::to_string(pos_));
  }

  bool eof() const noexcept { return pos_ >= doc_.size(); }
  char peek() const noexcept { return doc_[pos_]; }

  bool starts_with(std::string_view s) const noexcept {
    return doc_.compare(pos_, s.size(), s) == 0;
  }

  void skip_ws() noexcept {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r' ||
                      peek() == '\n')) {
      ++pos_;
    }
  }

  void skip_comment() {
    pos_ += 4;  // "<!--"
    const std::size_t end = doc_.find("-->", pos_);
    if (end == std::string_view::npos) fail("unterminated comment");
    pos_ = end + 3;
  }

  void skip_prolog() {
    skip_ws();
    if (starts_with("<?xml")) {
      const std::size_t end = doc_.find("?>", pos_);
      if (end == std::string_view::npos) fail("unterminated XML declaration");
      pos_ = end + 2;
    }
    skip_misc();
    if (!eof() && starts_with("<!")) fail("DTD sections are not supported");
  }

  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<!--")) {
        skip_comment();
      } else {
        return;
      }
    }
  }

  static bool is_name_char(char c) noexcept {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == ':' || c == '_' || c == '-' ||
           c == '.';
  }

  std::string parse_name() {
    const std::size_t start = pos_;
    while (!eof() && is_name_char(peek())) ++pos_;
    if (pos_ == start) fail("expected a name");
    return std::string(doc_.substr(start, pos_ - start));
  }

  void append_reference(std::string& out) {
    const std::size_t end = doc_.find(';', pos_);
    if (end == std::string_view::npos || end - pos_ > 12) {
      fail("unterminated entity reference");
    }
    const std::string_view ref = doc_.substr(pos_ + 1, end - pos_ - 1);
    if (ref == "amp") {
      out += '&';
    } else if (ref == "lt") {
      out += '<';
    } else if (ref == "gt") {
      out += '>';
    } else if (ref == "quot") {
      out += '"';
    } else if (ref == "apos") {
      out += '\'';
    } else if (!ref.empty() && ref[0] == '#') {
      long code = 0;
      const bool hex = ref.size() > 1 && (ref[1] == 'x' || ref[1] == 'X');
      try {
        code = std::stol(std::string(ref.substr(hex ? 2 : 1)), nullptr,
                         hex ? 16 : 10);
      } catch (...) {
        fail("bad character reference");
      }
      if (code <= 0 || code > 0x10FFFF) fail("character reference out of range");
      // UTF-8 encode.
      const unsigned cp = static_cast<unsigned>(code);
      if (cp < 0x80) {
        out += static_cast<char>(cp);
      } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
      } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
      } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
      }
    } else {
      fail("unknown entity '" + std::string(ref) + "'");
    }
    pos_ = end + 1;
  }

  std::string parse_attr_value() {
    if (eof() || (peek() != '"' && peek() != '\'')) {
      fail("expected quoted attribute value");
    }
    const char quote = peek();
    ++pos_;
    std::string out;
    while (!eof() && peek() != quote) {
      if (peek() == '&') {
        append_reference(out);
      } else if (peek() == '<') {
        fail("'<' in attribute value");
      } else {
        out += peek();
        ++pos_;
      }
    }
    if (eof()) fail("unterminated attribute value");
    ++pos_;
    return out;
  }

  Element parse_element() {
    if (eof() || peek() != '<') fail("expected element start");
    ++pos_;
    Element el;
    el.name = parse_name();
    for (;;) {
      skip_ws();
      if (eof()) fail("unterminated start tag");
      if (peek() == '>') {
        ++pos_;
        parse_content(el);
        return el;
      }
      if (starts_with("/>")) {
        pos_ += 2;
        return el;
      }
      std::string key = parse_name();
      skip_ws();
      if (eof() || peek() != '=') fail("expected '=' after attribute name");
      ++pos_;
      skip_ws();
      std::string value = parse_attr_value();
      if (el.attr(key)) fail("duplicate attribute '" + key + "'");
      el.attributes.emplace_back(std::move(key), std::move(value));
    }
  }

  void parse_content(Element& el) {
    std::string text;
    for (;;) {
      if (eof()) fail("unterminated element <" + el.name + ">");
      if (peek() == '<') {
        if (starts_with("</")) {
          pos_ += 2;
          const std::string end_name = parse_name();
          if (end_name != el.name) {
            fail("mismatched end tag </" + end_name + "> for <" + el.name +
                 ">");
          }
          skip_ws();
          if (eof() || peek() != '>') fail("malformed end tag");
          ++pos_;
          el.text = std::move(text);
          return;
        }
        if (starts_with("<!--")) {
          skip_comment();
          continue;
        }
        if (starts_with("<!")) fail("unsupported markup declaration");
        el.children.push_back(parse_element());
      } else if (peek() == '&') {
        append_reference(text);
      } else {
        text += peek();
        ++pos_;
      }
    }
  }
};

inline void write_node(const Element& el, std::string& out, int indent,
                       bool pretty) {
  const std::string pad = pretty ? std::string(indent * 2, ' ') : "";
  out += pad;
  out += '<';
  out += el.name;
  for (const auto& kv : el.attributes) {
    out += ' ';
    out += kv.first;
    out += "=\"";
    out += escape(kv.second, true);
    out += '"';
  }
  if (el.children.empty() && el.text.empty()) {
    out += "/>";
    if (pretty) out += '\n';
    return;
  }
  out += '>';
  if (el.children.empty()) {
    out += escape(el.text, false);
  } else {
    if (pretty) out += '\n';
    for (const auto& c : el.children) write_node(c, out, indent + 1, pretty);
    out += pad;
  }
  out += "</";
  out += el.name;
  out += '>';
  if (pretty) out += '\n';
}

}  // namespace detail

/// Parses a single well-formed document; malformed input raises
/// Errc::InvalidRequest with a byte offset locator.
inline Element parse(std::string_view doc) {
  return detail::Parser(doc).parse_document();
}

inline std::string serialize(const Element& root, bool pretty = true) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>";
  if (pretty) out += '\n';
  detail::write_node(root, out, 0, pretty);
  return out;
}

/// Structural equality up to attribute order and whitespace-only text.
inline bool canonical_equal(const Element& a, const Element& b) {
  if (a.name != b.name) return false;
  auto sorted_attrs = [](const Element& e) {
    auto attrs = e.attributes;
    std::sort(attrs.begin(), attrs.end());
    return attrs;
  };
  if (sorted_attrs(a) != sorted_attrs(b)) return false;
  auto significant_text = [](const Element& e) -> std::string_view {
    if (!e.children.empty()) return {};
    std::string_view t = e.text;
    // Text that is pure whitespace carries no information.
    if (t.find_first_not_of(" \t\r\n") == std::string_view::npos) return {};
    return t;
  };
  if (significant_text(a) != significant_text(b)) return false;
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!canonical_equal(a.children[i], b.children[i])) return false;
  }
  return true;
}

}  // namespace spsweb::xml

#endif  // SPSWEB_XML_HPP
