#include "arramon/model/vocab.h"

#include <sstream>

#include "arramon/error.h"
#include "arramon/objects.h"
#include "arramon/validator.h"
#include "arramon/worldgen.h"

namespace arramon {

Vocab::Vocab() {
    add("<unk>");
    add("<empty>");
}

int Vocab::add(std::string_view word) {
    const std::string w(word);
    if (auto it = ids_.find(w); it != ids_.end()) return it->second;
    const int id = static_cast<int>(words_.size());
    words_.push_back(w);
    ids_.emplace(w, id);
    return id;
}

int Vocab::id(std::string_view word) const {
    const auto it = ids_.find(std::string(word));
    return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(std::string_view text, bool allow_oov) const {
    std::vector<int> out;
    for (const auto& t : tokenize(text)) {
        const int i = id(t.norm);
        if (i == kUnk && !allow_oov) throw VocabError("unknown word \"" + t.norm + "\"");
        out.push_back(i);
    }
    if (out.empty()) out.push_back(kEmpty);
    return out;
}

Vocab Vocab::from_grammar() {
    Vocab v;
    static constexpr std::string_view kGrammar =
        "turn slightly partly sharply far around left right walk forward continue head straight keep walking "
        "proceed ahead until you reach get to are next just before past pass the and then after that pick it up "
        "collect is on your place put in front of behind side top between wall building with banner";
    std::istringstream in{std::string(kGrammar)};
    std::string w;
    while (in >> w) v.add(w);
    for (auto c : kObjectClasses) v.add(name(c));
    for (auto p : kPatterns) v.add(name(p));
    for (auto c : kColors) v.add(name(c));
    for (auto s : kBannerShapes) v.add(name(s));
    for (int k = 0; k <= static_cast<int>(LandmarkKind::BannerBuilding); ++k) {
        for (const auto& t : tokenize(name(static_cast<LandmarkKind>(k)))) v.add(t.norm);
    }
    for (auto t : {WallTexture::Wood, WallTexture::Brick, WallTexture::Spotted, WallTexture::Striped}) v.add(name(t));
    return v;
}

Vocab Vocab::build(std::span<const std::string> texts) {
    Vocab v = from_grammar();
    for (const auto& text : texts) {
        for (const auto& t : tokenize(text)) v.add(t.norm);
    }
    return v;
}

Vocab Vocab::from_words(std::span<const std::string> words) {
    Vocab v;
    if (words.size() < 2 || words[0] != "<unk>" || words[1] != "<empty>") {
        throw VocabError("word list must start with <unk> and <empty>");
    }
    for (std::size_t i = 2; i < words.size(); ++i) v.add(words[i]);
    return v;
}

} // namespace arramon
