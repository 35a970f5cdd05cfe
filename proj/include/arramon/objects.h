#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "arramon/geometry.h"

namespace arramon {

enum class ObjectClass { Tv, Mug, Bucket, Bowl, Hourglass, Book, Ball };
enum class Pattern { Dotted, Striped };
enum class Color { Red, Blue, Green, Yellow, Brown, Purple, White };

inline constexpr std::array kObjectClasses{ObjectClass::Tv,   ObjectClass::Mug,       ObjectClass::Bucket,
                                           ObjectClass::Bowl, ObjectClass::Hourglass, ObjectClass::Book,
                                           ObjectClass::Ball};
inline constexpr std::array kPatterns{Pattern::Dotted, Pattern::Striped};
inline constexpr std::array kColors{Color::Red,   Color::Blue,   Color::Green, Color::Yellow,
                                    Color::Brown, Color::Purple, Color::White};

std::string_view name(ObjectClass c);
std::string_view name(Pattern p);
std::string_view name(Color c);

/// Parsers accept the canonical names; "spotted" is read as Pattern::Dotted.
std::optional<ObjectClass> parse_object_class(std::string_view s);
std::optional<Pattern> parse_pattern(std::string_view s);
std::optional<Color> parse_color(std::string_view s);

/// A collectible basic-type object. `id` is unique within a map/episode.
struct ObjectSpec {
    ObjectClass cls = ObjectClass::Tv;
    Pattern pattern = Pattern::Dotted;
    Color color = Color::Red;
    std::string id;

    bool operator==(const ObjectSpec&) const = default;

    /// Same (class, pattern, color), ignoring id.
    bool same_attributes(const ObjectSpec& o) const {
        return cls == o.cls && pattern == o.pattern && color == o.color;
    }

    int shared_attributes(const ObjectSpec& o) const {
        return (cls == o.cls) + (pattern == o.pattern) + (color == o.color);
    }

    /// "dotted brown tv"
    std::string descriptor() const;

    /// Index into the 98 attribute combinations.
    int attribute_index() const;
    static ObjectSpec from_attribute_index(int idx, std::string id = {});
};

inline constexpr int kAttributeCombinations = 7 * 2 * 7;

enum class LandmarkKind {
    Bench,
    LampPost,
    PhoneBooth,
    Hydrant,
    TrashCan,
    Mailbox,
    BusStop,
    TrafficCone,
    NewsStand,
    Umbrella,
    BannerBuilding,
};

inline constexpr int kStreetLandmarkKinds = 10;

enum class BannerShape { Triangle, Circle, Square, Star };
inline constexpr std::array kBannerShapes{BannerShape::Triangle, BannerShape::Circle, BannerShape::Square,
                                          BannerShape::Star};

std::string_view name(LandmarkKind k);
std::string_view name(BannerShape s);
std::optional<LandmarkKind> parse_landmark_kind(std::string_view s);
std::optional<BannerShape> parse_banner_shape(std::string_view s);

/// Non-collectible background object. Street landmarks sit on walkable
/// cells; banner buildings sit on blocked building cells.
struct Landmark {
    std::string id;
    LandmarkKind kind = LandmarkKind::Bench;
    Color color = Color::Red;
    BannerShape shape = BannerShape::Triangle; ///< only for BannerBuilding
    Cell cell;

    bool operator==(const Landmark&) const = default;

    /// "red bench", "building with the blue star banner"
    std::string descriptor() const;
};

} // namespace arramon
