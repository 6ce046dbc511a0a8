#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace t2s {

enum class DifficultyScheme { spider4, bird3 };

enum class Difficulty { easy, medium, hard, extra, simple, moderate, challenge };

/// A hardness bucket tagged with the scheme it belongs to. Spider labels are
/// computed from query structure; BIRD labels come with the dataset.
struct DifficultyLabel {
    DifficultyScheme scheme = DifficultyScheme::spider4;
    Difficulty label = Difficulty::easy;

    friend bool operator==(const DifficultyLabel&, const DifficultyLabel&) = default;
    friend auto operator<=>(const DifficultyLabel&, const DifficultyLabel&) = default;
};

bool belongs_to(Difficulty d, DifficultyScheme scheme);
std::string_view to_string(Difficulty d);
std::string_view to_string(DifficultyScheme s);
/// Column heading used in report tables ("Easy", "Extra", "Challenging").
std::string_view display_name(Difficulty d);

std::optional<DifficultyScheme> parse_scheme(std::string_view s);
/// Accepts the dataset spellings too ("challenging", "extra hard").
std::optional<DifficultyLabel> parse_difficulty(std::string_view s);

}  // namespace t2s
