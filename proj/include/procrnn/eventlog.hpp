#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace procrnn {

/// One recorded step of a process instance. Timestamps are UTC epoch
/// milliseconds; attributes beyond the ones used for token building are
/// dropped at parse time.
struct Event {
    std::string activity;
    std::optional<std::string> lifecycle;
    std::optional<std::string> resource;
    std::optional<std::string> group;
    std::optional<int64_t> timestamp_ms;

    bool operator==(const Event&) const = default;
};

/// All events of one case, in recorded order.
struct Trace {
    std::string case_id;
    std::vector<Event> events;

    bool operator==(const Trace&) const = default;
};

struct EventLog {
    std::vector<Trace> traces;
    std::string source_name;  // informational only, not compared

    size_t total_events() const;

    bool operator==(const EventLog& o) const { return traces == o.traces; }
};

/// Which per-event organizational attribute feeds the token, if any.
enum class ResourceField { Resource, Group };

/// How the organizational attribute participates in learning:
/// None             -- not part of tokens at all;
/// PredictorOnly    -- present in input tokens, absent from target tokens;
/// PredictorAndPredictand -- present in both.
enum class ResourceMode { None, PredictorOnly, PredictorAndPredictand };

/// Rules for flattening events into discrete tokens.
struct TokenSchema {
    bool use_lifecycle = false;
    ResourceMode resource_mode = ResourceMode::None;
    ResourceField resource_field = ResourceField::Resource;
    std::string separator = "---";
    std::string eoc_token = "[EOC]";
};

/// Per-trace token streams. Input and target streams are position-aligned:
/// target_tokens[t][k] is the prediction label for input_tokens[t][k]. They
/// differ only under ResourceMode::PredictorOnly, where targets omit the
/// organizational component.
struct EncodedLog {
    std::vector<std::vector<std::string>> input_tokens;
    std::vector<std::vector<std::string>> target_tokens;
};

/// Reads a XES XML document (log > trace > event with string/date children).
/// Unknown elements and attributes are ignored. Throws ParseError for
/// malformed XML and SchemaError for structural violations (events without
/// an activity name, duplicate case ids).
EventLog parse_xes(std::istream& in, const std::string& source_name = "");

/// Reads the canonical CSV form. The header must be exactly
/// `case_id,activity,lifecycle,resource,group,timestamp`; empty cells map to
/// absent attributes; rows of one case keep file order; traces are ordered
/// by first appearance of their case id.
EventLog parse_csv(std::istream& in, const std::string& source_name = "");

/// Writes the canonical CSV form (RFC-4180 quoting, ISO-8601 UTC
/// timestamps with millisecond precision). parse_csv(write_csv(log)) == log.
void write_csv(const EventLog& log, std::ostream& out);

/// Flattens a log according to the schema. Every trace yields its events'
/// tokens followed by the end-of-case token, so the total token count is
/// exactly total_events() + traces.size(). Throws EncodingError when a used
/// attribute value contains the separator, and SchemaError when a selected
/// attribute is missing (absent lifecycle values encode as "NONE").
EncodedLog encode(const EventLog& log, const TokenSchema& schema);

/// Time-quantized encoding: each activity with a matching lifecycle
/// Start/Complete pair becomes ceil(duration/quantum) copies (at least one)
/// of its activity token; each trace ends with eoc_token. Activity intervals
/// within a trace must not overlap and must be properly paired, otherwise
/// EncodingError identifies the trace.
std::vector<std::vector<std::string>> encode_durations(const EventLog& log, int64_t quantum_ms,
                                                       const std::string& eoc_token = "[EOC]");

/// Parses ISO-8601 timestamps (date, 'T' or ' ' separator, optional
/// fractional seconds, optional 'Z' or +-HH:MM offset; no offset means UTC)
/// to UTC epoch milliseconds. Fractional digits beyond milliseconds are
/// truncated. Throws ParseError on malformed input.
int64_t parse_timestamp(std::string_view text);

/// Formats UTC epoch milliseconds as YYYY-MM-DDTHH:MM:SS.mmmZ.
std::string format_timestamp(int64_t epoch_ms);

}  // namespace procrnn
