#include "arramon/objects.h"

#include <stdexcept>

namespace arramon {

namespace {

constexpr std::array<std::string_view, 7> kClassNames{"tv", "mug", "bucket", "bowl", "hourglass", "book", "ball"};
constexpr std::array<std::string_view, 2> kPatternNames{"dotted", "striped"};
constexpr std::array<std::string_view, 7> kColorNames{"red", "blue", "green", "yellow", "brown", "purple", "white"};
constexpr std::array<std::string_view, 11> kLandmarkNames{"bench",   "lamp post",     "phone booth", "hydrant",
                                                          "trash can", "mailbox",     "bus stop",    "traffic cone",
                                                          "news stand", "umbrella",   "building"};
constexpr std::array<std::string_view, 4> kShapeNames{"triangle", "circle", "square", "star"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == s) return static_cast<E>(i);
    }
    return std::nullopt;
}

} // namespace

std::string_view name(ObjectClass c) { return kClassNames[static_cast<std::size_t>(c)]; }
std::string_view name(Pattern p) { return kPatternNames[static_cast<std::size_t>(p)]; }
std::string_view name(Color c) { return kColorNames[static_cast<std::size_t>(c)]; }
std::string_view name(LandmarkKind k) { return kLandmarkNames[static_cast<std::size_t>(k)]; }
std::string_view name(BannerShape s) { return kShapeNames[static_cast<std::size_t>(s)]; }

std::optional<ObjectClass> parse_object_class(std::string_view s) {
    if (s == "television") return ObjectClass::Tv;
    return lookup<ObjectClass>(kClassNames, s);
}

std::optional<Pattern> parse_pattern(std::string_view s) {
    if (s == "spotted") return Pattern::Dotted;
    return lookup<Pattern>(kPatternNames, s);
}

std::optional<Color> parse_color(std::string_view s) { return lookup<Color>(kColorNames, s); }
std::optional<LandmarkKind> parse_landmark_kind(std::string_view s) { return lookup<LandmarkKind>(kLandmarkNames, s); }
std::optional<BannerShape> parse_banner_shape(std::string_view s) { return lookup<BannerShape>(kShapeNames, s); }

std::string ObjectSpec::descriptor() const {
    std::string out;
    out.append(name(pattern)).append(" ").append(name(color)).append(" ").append(name(cls));
    return out;
}

int ObjectSpec::attribute_index() const {
    return (static_cast<int>(cls) * 2 + static_cast<int>(pattern)) * 7 + static_cast<int>(color);
}

ObjectSpec ObjectSpec::from_attribute_index(int idx, std::string id) {
    if (idx < 0 || idx >= kAttributeCombinations) throw std::out_of_range("attribute index");
    ObjectSpec s;
    s.color = static_cast<Color>(idx % 7);
    s.pattern = static_cast<Pattern>((idx / 7) % 2);
    s.cls = static_cast<ObjectClass>(idx / 14);
    s.id = std::move(id);
    return s;
}

std::string Landmark::descriptor() const {
    std::string out;
    if (kind == LandmarkKind::BannerBuilding) {
        out.append("building with the ").append(name(color)).append(" ").append(name(shape)).append(" banner");
    } else {
        out.append(name(color)).append(" ").append(name(kind));
    }
    return out;
}

} // namespace arramon
