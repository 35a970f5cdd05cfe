#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace arramon {

/// Word list for the instruction encoder. Id 0 is the out-of-vocabulary
/// token and id 1 stands in for an empty instruction.
class Vocab {
  public:
    static constexpr int kUnk = 0;
    static constexpr int kEmpty = 1;

    Vocab();

    /// Every word the instruction synthesizer can emit.
    static Vocab from_grammar();
    /// from_grammar() plus every token of `texts`.
    static Vocab build(std::span<const std::string> texts);
    static Vocab from_words(std::span<const std::string> words);

    int add(std::string_view word);
    /// kUnk for unknown words.
    int id(std::string_view word) const;
    /// Throws VocabError on an unknown word when `allow_oov` is false.
    std::vector<int> encode(std::string_view text, bool allow_oov = true) const;

    int size() const { return static_cast<int>(words_.size()); }
    const std::vector<std::string>& words() const { return words_; }

  private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> ids_;
};

} // namespace arramon
