#include "procrnn/vocab.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "procrnn/errors.hpp"

namespace procrnn {

bool Vocabulary::has_unknown() const {
    return !id_to_token.empty() && id_to_token.back() == kUnknownToken && counts.back() == 0;
}

int Vocabulary::unknown_id() const { return has_unknown() ? size() - 1 : -1; }

const std::string& Vocabulary::token(int token_id) const {
    if (token_id < 0 || token_id >= size())
        throw Error("vocabulary: id " + std::to_string(token_id) + " out of range (size " +
                    std::to_string(size()) + ")");
    return id_to_token[token_id];
}

int Vocabulary::id(const std::string& token) const {
    auto it = token_to_id.find(token);
    if (it == token_to_id.end())
        throw Error("vocabulary: token \"" + token + "\" not in vocabulary");
    return it->second;
}

int Vocabulary::id_or_unknown(const std::string& token) const {
    auto it = token_to_id.find(token);
    if (it != token_to_id.end()) return it->second;
    const int unk = unknown_id();
    if (unk < 0)
        throw Error("vocabulary: token \"" + token +
                    "\" not in vocabulary and no unknown sentinel is present");
    return unk;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& streams) {
    std::unordered_map<std::string, int64_t> freq;
    for (const auto& stream : streams)
        for (const auto& token : stream) ++freq[token];
    if (freq.empty()) throw Error("build_vocabulary: no tokens in input");

    std::vector<std::pair<std::string, int64_t>> entries(freq.begin(), freq.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    vocab.id_to_token.reserve(entries.size());
    vocab.counts.reserve(entries.size());
    for (const auto& [token, count] : entries) {
        vocab.token_to_id.emplace(token, vocab.size());
        vocab.id_to_token.push_back(token);
        vocab.counts.push_back(count);
    }
    return vocab;
}

Vocabulary with_unknown(const Vocabulary& vocab) {
    if (vocab.contains(Vocabulary::kUnknownToken))
        throw Error(std::string("with_unknown: reserved token ") + Vocabulary::kUnknownToken +
                    " already present in vocabulary");
    Vocabulary out = vocab;
    out.token_to_id.emplace(Vocabulary::kUnknownToken, out.size());
    out.id_to_token.push_back(Vocabulary::kUnknownToken);
    out.counts.push_back(0);
    return out;
}

std::vector<int> ids(const Vocabulary& vocab, std::span<const std::string> tokens) {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& token : tokens) out.push_back(vocab.id(token));
    return out;
}

std::vector<int> ids_or_unknown(const Vocabulary& vocab, std::span<const std::string> tokens,
                                int* oov_count) {
    const int unk = vocab.unknown_id();
    if (unk < 0)
        throw Error("ids_or_unknown: vocabulary has no unknown sentinel");
    int oov = 0;
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& token : tokens) {
        auto it = vocab.token_to_id.find(token);
        if (it == vocab.token_to_id.end()) {
            out.push_back(unk);
            ++oov;
        } else {
            out.push_back(it->second);
        }
    }
    if (oov_count) *oov_count = oov;
    return out;
}

void save_vocabulary(const Vocabulary& vocab, std::ostream& out) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (int k = 0; k < vocab.size(); ++k)
        doc.push_back({{"token", vocab.id_to_token[k]}, {"count", vocab.counts[k]}});
    out << doc.dump(2) << '\n';
}

Vocabulary load_vocabulary(std::istream& in) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("vocabulary JSON: ") + e.what(), 1);
    }
    if (!doc.is_array() || doc.empty())
        throw SchemaError("vocabulary JSON: expected a non-empty array");

    Vocabulary vocab;
    for (const auto& entry : doc) {
        if (!entry.is_object() || !entry.contains("token") || !entry.contains("count"))
            throw SchemaError("vocabulary JSON: each entry needs \"token\" and \"count\"");
        const std::string token = entry.at("token").get<std::string>();
        const int64_t count = entry.at("count").get<int64_t>();
        if (vocab.contains(token))
            throw SchemaError("vocabulary JSON: duplicate token \"" + token + "\"");
        vocab.token_to_id.emplace(token, vocab.size());
        vocab.id_to_token.push_back(token);
        vocab.counts.push_back(count);
    }
    return vocab;
}

}  // namespace procrnn
