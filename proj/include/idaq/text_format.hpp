#pragma once

// Plain-text table format shared by tasks, policies, meta-policies and ensembles.
//
//   # comment
//   kind task
//   states 3
//   rewards 0 0.5 1
//   table transition 6 3
//   0.25 0.75 0
//   ...
//
// A line is either a `key value...` entry or the header of a table block
// (`table <name> <rows> <cols>`) followed by exactly <rows> lines of <cols>
// numbers. Numbers are written with 17 significant digits.

#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "idaq/core.hpp"
#include "idaq/mdp.hpp"

namespace idaq {

class TextDocument {
 public:
  void set(const std::string& key, std::vector<std::string> values) {
    if (!entries_.count(key)) order_.push_back(key);
    entries_[key] = std::move(values);
  }
  void set(const std::string& key, const std::string& value) { set(key, std::vector<std::string>{value}); }
  void set_number(const std::string& key, double value) { set(key, format_double(value)); }
  void set_count(const std::string& key, std::size_t value) { set(key, std::to_string(value)); }
  void set_numbers(const std::string& key, const std::vector<double>& values) {
    std::vector<std::string> v;
    for (double x : values) v.push_back(format_double(x));
    set(key, std::move(v));
  }

  void add_table(const std::string& name, Table t) {
    if (!tables_.count(name)) table_order_.push_back(name);
    tables_[name] = std::move(t);
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  bool has_table(const std::string& name) const { return tables_.count(name) > 0; }

  const std::vector<std::string>& values(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ParseError("missing key '" + key + "'");
    return it->second;
  }
  const std::string& value(const std::string& key) const {
    const auto& v = values(key);
    if (v.size() != 1) throw ParseError("key '" + key + "' expects one value");
    return v.front();
  }
  std::size_t count(const std::string& key) const { return parse_index(value(key)); }
  double number(const std::string& key) const { return parse_double(value(key)); }
  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : values(key)) out.push_back(parse_double(s));
    return out;
  }
  const Table& table(const std::string& name) const {
    auto it = tables_.find(name);
    if (it == tables_.end()) throw ParseError("missing table '" + name + "'");
    return it->second;
  }

  void write(std::ostream& os) const {
    for (const auto& key : order_) {
      os << key;
      for (const auto& v : entries_.at(key)) os << ' ' << v;
      os << '\n';
    }
    for (const auto& name : table_order_) {
      const Table& t = tables_.at(name);
      os << "table " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
      for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) os << (c ? " " : "") << format_double(t(r, c));
        os << '\n';
      }
    }
  }

  std::string to_string() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  static TextDocument read(std::istream& is) {
    TextDocument doc;
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&](std::vector<std::string>& tokens) {
      while (std::getline(is, line)) {
        ++line_no;
        tokens = split(line);
        if (!tokens.empty()) return true;
      }
      return false;
    };
    std::vector<std::string> tokens;
    while (next_line(tokens)) {
      if (tokens[0] != "table") {
        std::vector<std::string> rest(tokens.begin() + 1, tokens.end());
        doc.set(tokens[0], std::move(rest));
        continue;
      }
      if (tokens.size() != 4) throw ParseError("line " + std::to_string(line_no) + ": bad table header");
      const std::string name = tokens[1];
      const std::size_t rows = parse_index(tokens[2]), cols = parse_index(tokens[3]);
      Table t(rows, cols);
      for (std::size_t r = 0; r < rows; ++r) {
        if (!next_line(tokens)) throw ParseError("table '" + name + "' is truncated");
        if (tokens.size() != cols)
          throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(cols) + " values");
        for (std::size_t c = 0; c < cols; ++c) t(r, c) = parse_double(tokens[c]);
      }
      doc.add_table(name, std::move(t));
    }
    return doc;
  }

  static TextDocument parse(const std::string& text) {
    std::istringstream is(text);
    return read(is);
  }

 private:
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ls(line.substr(0, line.find('#')));
    for (std::string tok; ls >> tok;) out.push_back(tok);
    return out;
  }

  std::vector<std::string> order_;
  std::map<std::string, std::vector<std::string>> entries_;
  std::vector<std::string> table_order_;
  std::map<std::string, Table> tables_;
};

inline void expect_kind(const TextDocument& doc, const std::string& kind) {
  if (doc.value("kind") != kind)
    throw ParseError("expected a '" + kind + "' document, found '" + doc.value("kind") + "'");
}

inline void put_shape(TextDocument& doc, const TaskShape& shape) {
  doc.set_count("states", shape.num_states);
  doc.set_count("actions", shape.num_actions);
  doc.set_numbers("rewards", shape.reward_support);
  doc.set_count("horizon", shape.horizon);
  doc.set_count("initial", shape.initial_state);
}

inline TaskShape get_shape(const TextDocument& doc) {
  TaskShape shape;
  shape.num_states = doc.count("states");
  shape.num_actions = doc.count("actions");
  shape.reward_support = doc.numbers("rewards");
  shape.horizon = doc.count("horizon");
  shape.initial_state = doc.count("initial");
  return shape;
}

inline TextDocument to_document(const TaskSpec& task) {
  TextDocument doc;
  doc.set("kind", "task");
  put_shape(doc, task.shape());
  doc.add_table("transition", task.transition_table());
  doc.add_table("reward", task.reward_table());
  return doc;
}

inline TaskSpec task_from_document(const TextDocument& doc,
                                   TaskSpec::Rows rows = TaskSpec::Rows::complete) {
  expect_kind(doc, "task");
  return TaskSpec(get_shape(doc), doc.table("transition"), doc.table("reward"), rows);
}

inline TextDocument to_document(const StationaryPolicy& policy) {
  TextDocument doc;
  doc.set("kind", "policy");
  doc.add_table("actions", policy.table());
  return doc;
}

inline StationaryPolicy policy_from_document(const TextDocument& doc) {
  expect_kind(doc, "policy");
  return StationaryPolicy(doc.table("actions"));
}

}  // namespace idaq
