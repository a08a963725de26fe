// Event labels and the canonical class orders used by every label vector.
//
// Six base events; every base except Steal carries a Success/Failure outcome,
// giving eleven final classes. Final-vector (VF) order expands each non-steal
// base into (success, failure) in base order and appends Steal last.
#pragma once

#include <array>
#include <string>
#include <string_view>

#include "error.hpp"

namespace ongcmp {

enum class BaseEvent { ThreePoint = 0, FreeThrow, Layup, OtherTwoPoint, SlamDunk, Steal };
enum class Outcome { Success = 0, Failure, NotApplicable };

inline constexpr std::size_t kNumBase = 6;
inline constexpr std::size_t kNumFinal = 11;
inline constexpr std::size_t kNumOcc = 5;  // Layup and OtherTwoPoint merged
inline constexpr std::size_t kMergedOccIndex = 2;

inline constexpr std::array<std::string_view, kNumBase> kBaseNames = {
    "ThreePoint", "FreeThrow", "Layup", "OtherTwoPoint", "SlamDunk", "Steal"};
inline constexpr std::array<std::string_view, 3> kOutcomeNames = {"Success", "Failure", "NotApplicable"};
inline constexpr std::array<std::string_view, kNumOcc> kOccNames = {
    "ThreePoint", "FreeThrow", "Layup+OtherTwoPoint", "SlamDunk", "Steal"};
inline constexpr std::array<std::string_view, 2> kPreNames = {"Layup", "OtherTwoPoint"};
inline constexpr std::array<std::string_view, 2> kSfNames = {"Success", "Failure"};

inline std::string_view base_name(BaseEvent b) { return kBaseNames[static_cast<std::size_t>(b)]; }
inline std::string_view outcome_name(Outcome o) { return kOutcomeNames[static_cast<std::size_t>(o)]; }

inline BaseEvent parse_base(std::string_view s) {
  for (std::size_t i = 0; i < kNumBase; ++i)
    if (kBaseNames[i] == s) return static_cast<BaseEvent>(i);
  throw ValidationError("unknown base event: " + std::string(s));
}

inline Outcome parse_outcome(std::string_view s) {
  for (std::size_t i = 0; i < 3; ++i)
    if (kOutcomeNames[i] == s) return static_cast<Outcome>(i);
  throw ValidationError("unknown outcome: " + std::string(s));
}

struct EventLabel {
  BaseEvent base = BaseEvent::ThreePoint;
  Outcome outcome = Outcome::Success;

  // Steal <=> NotApplicable.
  bool valid() const { return (base == BaseEvent::Steal) == (outcome == Outcome::NotApplicable); }

  void validate() const {
    if (!valid())
      throw ValidationError("invalid event label " + std::string(base_name(base)) + "/" +
                            std::string(outcome_name(outcome)));
  }

  std::size_t final_index() const {
    validate();
    if (base == BaseEvent::Steal) return kNumFinal - 1;
    return 2 * static_cast<std::size_t>(base) + static_cast<std::size_t>(outcome);
  }

  // Class index in the merged five-way occ label space.
  std::size_t occ_index() const {
    switch (base) {
      case BaseEvent::ThreePoint: return 0;
      case BaseEvent::FreeThrow: return 1;
      case BaseEvent::Layup:
      case BaseEvent::OtherTwoPoint: return kMergedOccIndex;
      case BaseEvent::SlamDunk: return 3;
      case BaseEvent::Steal: return 4;
    }
    return 0;
  }

  static EventLabel from_final_index(std::size_t i) {
    if (i >= kNumFinal) throw ValidationError("final class index out of range: " + std::to_string(i));
    if (i == kNumFinal - 1) return {BaseEvent::Steal, Outcome::NotApplicable};
    return {static_cast<BaseEvent>(i / 2), static_cast<Outcome>(i % 2)};
  }

  std::string name() const {
    if (base == BaseEvent::Steal) return "Steal";
    return std::string(base_name(base)) + "-" + std::string(outcome_name(outcome));
  }

  friend bool operator==(const EventLabel&, const EventLabel&) = default;
};

inline std::string final_class_name(std::size_t i) { return EventLabel::from_final_index(i).name(); }

inline BaseEvent occ_index_to_base(std::size_t i) {
  constexpr std::array<BaseEvent, kNumOcc> m = {BaseEvent::ThreePoint, BaseEvent::FreeThrow, BaseEvent::Layup,
                                                BaseEvent::SlamDunk, BaseEvent::Steal};
  require(i < kNumOcc && i != kMergedOccIndex, "occ index does not name a single base event");
  return m[i];
}

}  // namespace ongcmp
