#include "tapt/dataset.hpp"

#include "tapt/errors.hpp"

#include <fstream>
#include <istream>
#include <stdexcept>

namespace tapt {

std::string_view to_string(LabelTag tag) {
  switch (tag) {
    case LabelTag::NonHostile: return "non-hostile";
    case LabelTag::Fake: return "fake";
    case LabelTag::Hate: return "hate";
    case LabelTag::Offensive: return "offensive";
    case LabelTag::Defamation: return "defamation";
  }
  return "";
}

std::optional<LabelTag> parse_label(std::string_view text) {
  for (LabelTag t : {LabelTag::NonHostile, LabelTag::Fake, LabelTag::Hate, LabelTag::Offensive,
                     LabelTag::Defamation}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::string_view to_string(Task task) {
  switch (task) {
    case Task::Coarse: return "hostility";
    case Task::Fake: return "fake";
    case Task::Hate: return "hate";
    case Task::Offensive: return "offensive";
    case Task::Defamation: return "defamation";
  }
  return "";
}

std::optional<Task> parse_task(std::string_view text) {
  for (Task t : kTasks) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

int task_index(Task task) { return static_cast<int>(task); }

std::optional<LabelTag> task_label(Task task) {
  switch (task) {
    case Task::Coarse: return std::nullopt;
    case Task::Fake: return LabelTag::Fake;
    case Task::Hate: return LabelTag::Hate;
    case Task::Offensive: return LabelTag::Offensive;
    case Task::Defamation: return LabelTag::Defamation;
  }
  return std::nullopt;
}

std::string join_labels(const LabelSet& labels) {
  std::string out;
  for (LabelTag t : labels) {
    if (!out.empty()) out += '|';
    out += to_string(t);
  }
  return out;
}

void validate_labels(const LabelSet& labels) {
  if (labels.contains(LabelTag::NonHostile) && labels.size() > 1) {
    throw std::invalid_argument("non-hostile cannot be combined with other labels: " + join_labels(labels));
  }
}

namespace {

// Reads one record; returns false at end of input. `line` is advanced past
// every newline consumed.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line,
                 const std::string& source) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  bool quoted_field = false;
  const std::size_t start = line;
  int c;
  while ((c = in.get()) != std::char_traits<char>::eof()) {
    any = true;
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get();
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      if (!field.empty() || quoted_field) throw DataError(source, start, "stray quote inside unquoted field");
      in_quotes = true;
      quoted_field = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      quoted_field = false;
    } else if (ch == '\n') {
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else if (ch == '\r' && in.peek() == '\n') {
      // CRLF: the '\n' terminates the record on the next iteration
    } else {
      if (quoted_field) throw DataError(source, start, "text after closing quote");
      field += ch;
    }
  }
  if (in_quotes) throw DataError(source, start, "unterminated quoted field");
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

std::vector<RawPost> parse_dataset(std::istream& in, const std::string& source) {
  std::vector<RawPost> posts;
  std::vector<std::string> fields;
  std::size_t line = 1;
  std::size_t record_line = line;
  if (!read_record(in, fields, line, source)) throw DataError(source, 1, "missing header");
  if (fields != std::vector<std::string>{"id", "text", "labels"}) {
    throw DataError(source, 1, "header must be id,text,labels");
  }
  while (true) {
    record_line = line;
    if (!read_record(in, fields, line, source)) break;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != 3) {
      throw DataError(source, record_line, "expected 3 fields, found " + std::to_string(fields.size()));
    }
    RawPost post{fields[0], fields[1], {}};
    std::string_view labels = fields[2];
    while (!labels.empty()) {
      auto bar = labels.find('|');
      std::string_view tag = labels.substr(0, bar);
      auto parsed = parse_label(tag);
      if (!parsed) throw DataError(source, record_line, "unknown label '" + std::string(tag) + "'");
      post.labels.insert(*parsed);
      if (bar == std::string_view::npos) break;
      labels.remove_prefix(bar + 1);
      if (labels.empty()) throw DataError(source, record_line, "empty label after '|'");
    }
    try {
      validate_labels(post.labels);
    } catch (const std::invalid_argument& e) {
      throw DataError(source, record_line, e.what());
    }
    posts.push_back(std::move(post));
  }
  return posts;
}

std::vector<RawPost> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  return parse_dataset(in, path.string());
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

LabelHistogram label_histogram(const std::vector<RawPost>& posts) {
  LabelHistogram h;
  for (const auto& p : posts) {
    if (!p.labeled()) ++h.unlabeled;
    for (LabelTag t : p.labels) {
      switch (t) {
        case LabelTag::NonHostile: ++h.non_hostile; break;
        case LabelTag::Defamation: ++h.defamation; break;
        case LabelTag::Fake: ++h.fake; break;
        case LabelTag::Hate: ++h.hate; break;
        case LabelTag::Offensive: ++h.offensive; break;
      }
    }
  }
  return h;
}

}  // namespace tapt
