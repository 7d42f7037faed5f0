#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tapt {

enum class LabelTag { NonHostile, Fake, Hate, Offensive, Defamation };

inline constexpr std::array<LabelTag, 4> kFineTags = {LabelTag::Fake, LabelTag::Hate, LabelTag::Offensive,
                                                      LabelTag::Defamation};

/// "non-hostile", "fake", "hate", "offensive", "defamation".
std::string_view to_string(LabelTag tag);
std::optional<LabelTag> parse_label(std::string_view text);

using LabelSet = std::set<LabelTag>;

/// The five binary problems: coarse hostility and one per fine tag. The
/// numeric order is the task index used for seeding.
enum class Task { Coarse, Fake, Hate, Offensive, Defamation };

inline constexpr std::array<Task, 5> kTasks = {Task::Coarse, Task::Fake, Task::Hate, Task::Offensive,
                                               Task::Defamation};

/// Report order: hostility first, then the fine tasks alphabetically.
inline constexpr std::array<Task, 5> kReportOrder = {Task::Coarse, Task::Defamation, Task::Fake, Task::Hate,
                                                     Task::Offensive};

/// "hostility", "fake", "hate", "offensive", "defamation".
std::string_view to_string(Task task);
std::optional<Task> parse_task(std::string_view text);
int task_index(Task task);
/// The label a fine task detects; Coarse has none.
std::optional<LabelTag> task_label(Task task);

/// '|'-joined tags in enum order; empty set gives "".
std::string join_labels(const LabelSet& labels);

/// Throws std::invalid_argument when non-hostile is combined with another tag.
void validate_labels(const LabelSet& labels);

struct RawPost {
  std::string id;
  std::string text;
  LabelSet labels;  // empty for unlabeled rows

  bool labeled() const { return !labels.empty(); }
  bool hostile() const { return labeled() && !labels.contains(LabelTag::NonHostile); }
};

/// Parses the "id,text,labels" dataset format. Quoted fields may contain
/// commas, newlines and doubled quotes. Errors carry the line number where the
/// offending record starts.
std::vector<RawPost> parse_dataset(std::istream& in, const std::string& source = "<dataset>");
std::vector<RawPost> load_dataset(const std::filesystem::path& path);

/// Quotes a field for the dataset format when needed.
std::string csv_field(std::string_view text);

/// Posts carrying each tag, in the row order of the training-label table.
struct LabelHistogram {
  std::size_t non_hostile = 0;
  std::size_t defamation = 0;
  std::size_t fake = 0;
  std::size_t hate = 0;
  std::size_t offensive = 0;
  std::size_t unlabeled = 0;

  bool operator==(const LabelHistogram&) const = default;
};

LabelHistogram label_histogram(const std::vector<RawPost>& posts);

}  // namespace tapt
