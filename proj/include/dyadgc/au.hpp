#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dyadgc/intervals.hpp"
#include "dyadgc/timeseries.hpp"

namespace dyadgc {

using AuId = int;

/// The 17 intensity-regressed action units in OpenFace 2.0 output.
inline constexpr std::array<AuId, 17> kOpenFaceAus{1,  2,  4,  5,  6,  7,  9,  10, 12,
                                                   14, 15, 17, 20, 23, 25, 26, 45};
/// Recognised when present in a CSV but never required.
inline constexpr std::array<AuId, 1> kOptionalAus{24};

inline constexpr double kMaxIntensity = 5.0;
inline constexpr double kDefaultConfidence = 0.89;
inline constexpr double kDefaultActivationFactor = 0.5;

enum class Condition { respectful, contempt, objective };
enum class Role { sender, receiver };

inline constexpr std::array<Condition, 3> kAllConditions{Condition::respectful, Condition::contempt,
                                                         Condition::objective};

std::string_view to_string(Condition c);
std::string_view to_string(Role r);
/// Throws ConfigError on an unknown name.
Condition parse_condition(std::string_view s);
Role parse_role(std::string_view s);

/// OpenFace column name for an AU intensity, e.g. 6 -> "AU06_r".
std::string au_column(AuId au);

/// Named expression and the AUs that must all be active for it.
struct ExpressionDef {
    std::string name;
    std::vector<AuId> au_ids;
};

/// Upper/lower split of the six basic emotions (11 expressions).
const std::vector<ExpressionDef>& default_expressions();
/// Throws ConfigError when the name is not in the registry.
const ExpressionDef& find_expression(std::string_view name);

struct AUFrame {
    Frame frame_index = 0;
    double confidence = 0.0;
    std::map<AuId, double> au_intensity;
};

/// Per-frame AU intensities of one participant in one condition, stored
/// column-wise: row i of `intensity` belongs to `frames(i)`.
struct AURecording {
    std::string participant_id;
    Condition condition = Condition::respectful;
    Role role = Role::sender;
    std::vector<AuId> au_ids;
    Eigen::Matrix<Frame, Eigen::Dynamic, 1> frames;
    Eigen::VectorXd confidence;
    Eigen::MatrixXd intensity;

    Eigen::Index num_frames() const { return frames.size(); }
    bool has_au(AuId au) const;
    /// Column of `intensity` for an AU; throws ConfigError if absent.
    Eigen::Index au_index(AuId au) const;
    auto trace(AuId au) const { return intensity.col(au_index(au)); }
    AUFrame frame(Eigen::Index row) const;

    /// Throws FormatError on unsorted frames or out-of-range values.
    void validate() const;
};

/// Parse an OpenFace-style CSV. Header names are matched after trimming
/// whitespace; unknown columns are ignored.
AURecording parse_au_csv(const std::filesystem::path& path);
AURecording parse_au_csv(std::istream& is, std::string_view source = "<stream>");

/// Writes `frame,confidence,AUxx_r...` with shortest round-trip numbers.
void write_au_csv(std::ostream& os, const AURecording& rec);
void write_au_csv(const std::filesystem::path& path, const AURecording& rec);

/// Sender and receiver restricted to the frames where both are confident.
struct SyncedPair {
    AURecording sender;
    AURecording receiver;
    /// Maximal runs of consecutive surviving frames.
    IntervalSet kept_frames;
};

SyncedPair confidence_sync(const AURecording& s, const AURecording& r,
                           double threshold = kDefaultConfidence);

struct AUStats {
    double mean = 0.0;
    double std = 0.0;
};

/// Per-participant average face pooled over conditions.
struct AUBaseline {
    std::map<AuId, AUStats> stats;
    /// Set when fewer than all three conditions contributed.
    bool incomplete = false;
};

AUBaseline baseline_stats(std::span<const AURecording> recordings);

/// Per-AU activation: intensity >= mean + factor * std. Masks are aligned
/// to the recording's rows and start at its first frame.
std::map<AuId, BinaryMask> au_activation(const AURecording& rec, const AUBaseline& base,
                                         double factor = kDefaultActivationFactor);

/// Frame-wise AND of the member AU masks.
BinaryMask expression_activation(const std::map<AuId, BinaryMask>& act, const ExpressionDef& def);

/// Per-row mean intensity of the member AUs.
TimeSeries expression_signal(const AURecording& rec, const ExpressionDef& def);

/// Active frames divided by the video length.
double count_activations(const BinaryMask& mask, Eigen::Index video_len);

}  // namespace dyadgc
