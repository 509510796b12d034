#pragma once

// Minimal DOM over expat. Internal to the library.

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace branchdrift::xml {

struct Node {
  std::string name;  // local name, namespace prefix stripped
  std::map<std::string, std::string> attrs;
  std::vector<std::unique_ptr<Node>> children;
  std::string text;  // concatenated character data of this element only
  long line = 0;
  long column = 0;

  const std::string* attr(const std::string& key) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? nullptr : &it->second;
  }
  const Node* child(std::string_view child_name) const;
  std::vector<const Node*> children_named(std::string_view child_name) const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, long line, long column)
      : std::runtime_error(message + " at line " + std::to_string(line) + ", column " +
                           std::to_string(column)),
        line_(line), column_(column) {}
  long line() const { return line_; }
  long column() const { return column_; }

 private:
  long line_;
  long column_;
};

/// Parses a complete document; throws ParseError on malformed XML.
std::unique_ptr<Node> parse(std::string_view document);

std::string escape(std::string_view text);

}  // namespace branchdrift::xml
