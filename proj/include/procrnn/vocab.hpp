#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace procrnn {

/// Bidirectional token <-> integer-id map. Ids are assigned by descending
/// corpus frequency with lexicographic tie-breaking, so id 0 is always the
/// most frequent token and ids are stable across runs on the same corpus.
struct Vocabulary {
    static constexpr const char* kUnknownToken = "[UNK]";

    std::vector<std::string> id_to_token;
    std::vector<int64_t> counts;  // corpus counts, aligned with id_to_token
    std::unordered_map<std::string, int> token_to_id;

    int size() const { return static_cast<int>(id_to_token.size()); }

    /// True when the last id is the reserved unknown-token sentinel.
    bool has_unknown() const;
    int unknown_id() const;  // -1 when no sentinel is present

    const std::string& token(int id) const;
    bool contains(const std::string& token) const { return token_to_id.count(token) != 0; }

    /// Id of a known token; throws Error for out-of-vocabulary tokens.
    int id(const std::string& token) const;

    /// Id of a token, mapping out-of-vocabulary tokens to the unknown
    /// sentinel; throws Error when the vocabulary has no sentinel.
    int id_or_unknown(const std::string& token) const;
};

/// Builds a vocabulary over all tokens in the given streams.
/// Throws Error when the streams contain no tokens at all.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& streams);

/// Returns a copy with the unknown-token sentinel appended as the last id
/// (count 0). Throws Error if the corpus already contains the reserved
/// token or a sentinel was appended before.
Vocabulary with_unknown(const Vocabulary& vocab);

/// Ids for a token sequence; throws Error on any out-of-vocabulary token.
std::vector<int> ids(const Vocabulary& vocab, std::span<const std::string> tokens);

/// Ids for a token sequence with out-of-vocabulary tokens mapped to the
/// unknown sentinel. Returns the number of tokens that were mapped.
std::vector<int> ids_or_unknown(const Vocabulary& vocab, std::span<const std::string> tokens,
                                int* oov_count = nullptr);

/// JSON persistence: an array of {"token": ..., "count": ...} objects in id
/// order. A trailing zero-count [UNK] entry round-trips as the sentinel.
void save_vocabulary(const Vocabulary& vocab, std::ostream& out);
Vocabulary load_vocabulary(std::istream& in);

}  // namespace procrnn
