#include "procrnn/eventlog.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "procrnn/errors.hpp"

namespace procrnn {

size_t EventLog::total_events() const {
    size_t n = 0;
    for (const auto& trace : traces) n += trace.events.size();
    return n;
}

// ---------------------------------------------------------------------------
// Timestamps
// ---------------------------------------------------------------------------

namespace {

constexpr int64_t kMsPerDay = 86'400'000;

[[noreturn]] void ts_fail(const std::string& msg, size_t pos) {
    throw ParseError("timestamp: " + msg, 1, static_cast<int>(pos) + 1);
}

long long ts_digits(std::string_view s, size_t& pos, int count, const char* what) {
    long long value = 0;
    for (int k = 0; k < count; ++k) {
        if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos])))
            ts_fail(std::string("expected digit in ") + what, pos);
        value = value * 10 + (s[pos] - '0');
        ++pos;
    }
    return value;
}

void ts_expect(std::string_view s, size_t& pos, char c) {
    if (pos >= s.size() || s[pos] != c)
        ts_fail(std::string("expected '") + c + "'", pos);
    ++pos;
}

}  // namespace

int64_t parse_timestamp(std::string_view text) {
    size_t pos = 0;
    const long long year = ts_digits(text, pos, 4, "year");
    ts_expect(text, pos, '-');
    const long long month = ts_digits(text, pos, 2, "month");
    ts_expect(text, pos, '-');
    const long long day = ts_digits(text, pos, 2, "day");

    if (pos >= text.size() || (text[pos] != 'T' && text[pos] != ' '))
        ts_fail("expected 'T' or ' ' between date and time", pos);
    ++pos;

    const long long hour = ts_digits(text, pos, 2, "hour");
    ts_expect(text, pos, ':');
    const long long minute = ts_digits(text, pos, 2, "minute");
    ts_expect(text, pos, ':');
    const long long second = ts_digits(text, pos, 2, "second");

    long long millis = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        int ndigits = 0;
        long long frac = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            if (ndigits < 3) frac = frac * 10 + (text[pos] - '0');
            ++ndigits;
            ++pos;
        }
        if (ndigits == 0) ts_fail("expected fractional digits after '.'", pos);
        while (ndigits < 3) {
            frac *= 10;
            ++ndigits;
        }
        millis = frac;
    }

    long long offset_min = 0;
    if (pos < text.size()) {
        const char c = text[pos];
        if (c == 'Z') {
            ++pos;
        } else if (c == '+' || c == '-') {
            ++pos;
            const long long oh = ts_digits(text, pos, 2, "offset hours");
            long long om = 0;
            if (pos < text.size()) {
                if (text[pos] == ':') {
                    ++pos;
                    om = ts_digits(text, pos, 2, "offset minutes");
                } else if (std::isdigit(static_cast<unsigned char>(text[pos]))) {
                    om = ts_digits(text, pos, 2, "offset minutes");
                }
            }
            if (oh > 23 || om > 59) ts_fail("offset out of range", pos);
            offset_min = (oh * 60 + om) * (c == '-' ? -1 : 1);
        } else {
            ts_fail("unexpected trailing character", pos);
        }
    }
    if (pos != text.size()) ts_fail("unexpected trailing character", pos);

    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year(static_cast<int>(year)),
                             std::chrono::month(static_cast<unsigned>(month)),
                             std::chrono::day(static_cast<unsigned>(day))};
    if (!ymd.ok()) ts_fail("invalid calendar date", 0);
    if (hour > 23 || minute > 59 || second > 59) ts_fail("time of day out of range", 0);

    const int64_t days = sys_days(ymd).time_since_epoch().count();
    int64_t ms = days * kMsPerDay + (hour * 3600 + minute * 60 + second) * 1000 + millis;
    ms -= offset_min * 60'000;
    return ms;
}

std::string format_timestamp(int64_t epoch_ms) {
    int64_t rem = epoch_ms % kMsPerDay;
    if (rem < 0) rem += kMsPerDay;
    const int64_t days = (epoch_ms - rem) / kMsPerDay;

    using namespace std::chrono;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    const int ms = static_cast<int>(rem % 1000);
    const int sec_of_day = static_cast<int>(rem / 1000);

    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), sec_of_day / 3600, (sec_of_day / 60) % 60,
                  sec_of_day % 60, ms);
    return buf;
}

// ---------------------------------------------------------------------------
// XES (minimal XML subset: elements, attributes, comments, PIs, CDATA)
// ---------------------------------------------------------------------------

namespace {

class XmlCursor {
public:
    explicit XmlCursor(std::string text) : text_(std::move(text)) {
        // Strip a UTF-8 byte-order mark if present.
        if (text_.rfind("\xEF\xBB\xBF", 0) == 0) pos_ = 3;
    }

    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }
    bool starts_with(std::string_view s) const { return text_.compare(pos_, s.size(), s) == 0; }

    char get() {
        const char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void advance(size_t n) {
        for (size_t k = 0; k < n; ++k) get();
    }

    int line() const { return line_; }
    int column() const { return col_; }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError("XML: " + msg, line_, col_); }

    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) get();
    }

private:
    std::string text_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == ':' || c == '_' || c == '-' ||
           c == '.' || static_cast<unsigned char>(c) >= 0x80;
}

std::string read_name(XmlCursor& c) {
    std::string name;
    while (!c.eof() && is_name_char(c.peek())) name.push_back(c.get());
    if (name.empty()) c.fail("expected a name");
    return name;
}

std::string decode_entities(XmlCursor& c, const std::string& raw) {
    if (raw.find('&') == std::string::npos) return raw;
    std::string out;
    out.reserve(raw.size());
    for (size_t k = 0; k < raw.size(); ++k) {
        if (raw[k] != '&') {
            out.push_back(raw[k]);
            continue;
        }
        const size_t end = raw.find(';', k);
        if (end == std::string::npos) c.fail("unterminated entity reference");
        const std::string ent = raw.substr(k + 1, end - k - 1);
        if (ent == "amp") out.push_back('&');
        else if (ent == "lt") out.push_back('<');
        else if (ent == "gt") out.push_back('>');
        else if (ent == "quot") out.push_back('"');
        else if (ent == "apos") out.push_back('\'');
        else if (!ent.empty() && ent[0] == '#') {
            long code = 0;
            try {
                code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                           ? std::stol(ent.substr(2), nullptr, 16)
                           : std::stol(ent.substr(1), nullptr, 10);
            } catch (const std::exception&) {
                c.fail("bad numeric character reference '&" + ent + ";'");
            }
            if (code <= 0 || code > 0x10FFFF) c.fail("character reference out of range");
            // Encode the code point as UTF-8.
            if (code < 0x80) {
                out.push_back(static_cast<char>(code));
            } else if (code < 0x800) {
                out.push_back(static_cast<char>(0xC0 | (code >> 6)));
                out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
            } else if (code < 0x10000) {
                out.push_back(static_cast<char>(0xE0 | (code >> 12)));
                out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
                out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
            } else {
                out.push_back(static_cast<char>(0xF0 | (code >> 18)));
                out.push_back(static_cast<char>(0x80 | ((code >> 12) & 0x3F)));
                out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
                out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
            }
        } else {
            c.fail("unknown entity '&" + ent + ";'");
        }
        k = end;
    }
    return out;
}

using AttrList = std::vector<std::pair<std::string, std::string>>;

AttrList read_attributes(XmlCursor& c) {
    AttrList attrs;
    for (;;) {
        c.skip_ws();
        if (c.eof()) c.fail("unexpected end of input inside tag");
        const char ch = c.peek();
        if (ch == '>' || ch == '/' || ch == '?') return attrs;
        std::string name = read_name(c);
        c.skip_ws();
        if (c.eof() || c.peek() != '=') c.fail("expected '=' after attribute name");
        c.get();
        c.skip_ws();
        if (c.eof() || (c.peek() != '"' && c.peek() != '\'')) c.fail("expected quoted attribute value");
        const char quote = c.get();
        std::string raw;
        while (!c.eof() && c.peek() != quote) {
            if (c.peek() == '<') c.fail("'<' not allowed in attribute value");
            raw.push_back(c.get());
        }
        if (c.eof()) c.fail("unterminated attribute value");
        c.get();  // closing quote
        attrs.emplace_back(std::move(name), decode_entities(c, raw));
    }
}

// Skips <!-- comments -->, <?processing instructions?> and <!DOCTYPE...>/
// <![CDATA[...]]> sections. Assumes the cursor is at '<'. Returns false when
// the markup at the cursor is a regular tag instead.
bool skip_non_element_markup(XmlCursor& c) {
    if (c.starts_with("<!--")) {
        c.advance(4);
        while (!c.eof() && !c.starts_with("-->")) c.get();
        if (c.eof()) c.fail("unterminated comment");
        c.advance(3);
        return true;
    }
    if (c.starts_with("<![CDATA[")) {
        c.advance(9);
        while (!c.eof() && !c.starts_with("]]>")) c.get();
        if (c.eof()) c.fail("unterminated CDATA section");
        c.advance(3);
        return true;
    }
    if (c.starts_with("<?")) {
        c.advance(2);
        while (!c.eof() && !c.starts_with("?>")) c.get();
        if (c.eof()) c.fail("unterminated processing instruction");
        c.advance(2);
        return true;
    }
    if (c.starts_with("<!")) {
        // DOCTYPE or similar declaration; skip to the matching '>' at nesting
        // depth 0 (internal subsets use '[...]').
        c.advance(2);
        int bracket_depth = 0;
        while (!c.eof()) {
            const char ch = c.get();
            if (ch == '[') ++bracket_depth;
            else if (ch == ']') --bracket_depth;
            else if (ch == '>' && bracket_depth <= 0) return true;
        }
        c.fail("unterminated declaration");
    }
    return false;
}

/// Receives start/end element notifications and assembles the log.
class XesBuilder {
public:
    void start(XmlCursor& c, const std::string& name, const AttrList& attrs) {
        const Ctx top = ctx_.empty() ? Ctx::Root : ctx_.back();
        Ctx next = Ctx::Other;
        switch (top) {
            case Ctx::Root:
                if (name != "log")
                    throw SchemaError("XES: root element is <" + name + ">, expected <log>");
                next = Ctx::Log;
                break;
            case Ctx::Log:
                if (name == "trace") {
                    next = Ctx::Trace;
                    trace_ = Trace{};
                    trace_has_id_ = false;
                }
                break;
            case Ctx::Trace:
                if (name == "event") {
                    next = Ctx::Event;
                    event_ = Event{};
                    event_has_activity_ = false;
                } else if (name == "string") {
                    apply_trace_attr(attrs);
                }
                break;
            case Ctx::Event:
                if (name == "string" || name == "date") apply_event_attr(c, name, attrs);
                break;
            case Ctx::Other:
                break;
        }
        ctx_.push_back(next);
    }

    void end() {
        const Ctx top = ctx_.back();
        ctx_.pop_back();
        if (top == Ctx::Event) {
            if (!event_has_activity_) pending_bad_event_ = static_cast<int>(trace_.events.size());
            trace_.events.push_back(std::move(event_));
        } else if (top == Ctx::Trace) {
            finish_trace();
        }
    }

    EventLog take(const std::string& source_name) {
        log_.source_name = source_name;
        return std::move(log_);
    }

private:
    enum class Ctx { Root, Log, Trace, Event, Other };

    void apply_trace_attr(const AttrList& attrs) {
        const auto [key, value] = key_value(attrs);
        if (key == "concept:name") {
            trace_.case_id = value;
            trace_has_id_ = true;
        }
    }

    void apply_event_attr(XmlCursor& c, const std::string& element, const AttrList& attrs) {
        const auto [key, value] = key_value(attrs);
        if (element == "date") {
            if (key == "time:timestamp") {
                try {
                    event_.timestamp_ms = parse_timestamp(value);
                } catch (const ParseError& e) {
                    c.fail(std::string("bad time:timestamp value \"") + value + "\": " + e.what());
                }
            }
            return;
        }
        if (key == "concept:name") {
            event_.activity = value;
            event_has_activity_ = true;
        } else if (key == "lifecycle:transition") {
            event_.lifecycle = value;
        } else if (key == "org:resource") {
            event_.resource = value;
        } else if (key == "org:group") {
            event_.group = value;
        }
    }

    static std::pair<std::string, std::string> key_value(const AttrList& attrs) {
        std::string key, value;
        for (const auto& [k, v] : attrs) {
            if (k == "key") key = v;
            else if (k == "value") value = v;
        }
        return {key, value};
    }

    void finish_trace() {
        if (!trace_has_id_) trace_.case_id = "trace_" + std::to_string(log_.traces.size());
        if (pending_bad_event_ >= 0) {
            const int ordinal = pending_bad_event_;
            pending_bad_event_ = -1;
            throw SchemaError("XES: event " + std::to_string(ordinal + 1) + " of trace \"" +
                              trace_.case_id + "\" has no concept:name");
        }
        if (!seen_ids_.insert(trace_.case_id).second)
            throw SchemaError("XES: duplicate case id \"" + trace_.case_id + "\"");
        log_.traces.push_back(std::move(trace_));
    }

    std::vector<Ctx> ctx_;
    EventLog log_;
    Trace trace_;
    Event event_;
    bool trace_has_id_ = false;
    bool event_has_activity_ = false;
    int pending_bad_event_ = -1;
    std::unordered_set<std::string> seen_ids_;
};

// Parses one element. The cursor must be at its '<'.
void parse_element(XmlCursor& c, XesBuilder& builder) {
    c.get();  // '<'
    const std::string name = read_name(c);
    const AttrList attrs = read_attributes(c);
    bool self_closing = false;
    if (!c.eof() && c.peek() == '/') {
        c.get();
        self_closing = true;
    }
    if (c.eof() || c.peek() != '>') c.fail("expected '>' to close tag <" + name + ">");
    c.get();

    builder.start(c, name, attrs);
    if (self_closing) {
        builder.end();
        return;
    }

    for (;;) {
        // Text content is not meaningful in XES; skip to the next markup.
        while (!c.eof() && c.peek() != '<') c.get();
        if (c.eof()) c.fail("unexpected end of input inside <" + name + ">");
        if (c.starts_with("</")) {
            c.advance(2);
            const std::string end_name = read_name(c);
            if (end_name != name)
                c.fail("mismatched end tag </" + end_name + ">, expected </" + name + ">");
            c.skip_ws();
            if (c.eof() || c.peek() != '>') c.fail("expected '>' in end tag");
            c.get();
            builder.end();
            return;
        }
        if (skip_non_element_markup(c)) continue;
        parse_element(c, builder);
    }
}

std::string slurp(std::istream& in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed to read input stream");
    return std::move(buf).str();
}

}  // namespace

EventLog parse_xes(std::istream& in, const std::string& source_name) {
    XmlCursor cursor(slurp(in));
    XesBuilder builder;

    cursor.skip_ws();
    while (!cursor.eof() && cursor.peek() == '<' && skip_non_element_markup(cursor)) cursor.skip_ws();
    if (cursor.eof() || cursor.peek() != '<') cursor.fail("expected root element");
    parse_element(cursor, builder);
    cursor.skip_ws();
    if (!cursor.eof()) cursor.fail("unexpected content after root element");

    return builder.take(source_name);
}

// ---------------------------------------------------------------------------
// CSV (RFC-4180)
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kCsvHeader = {"case_id", "activity", "lifecycle",
                                             "resource", "group",   "timestamp"};

struct CsvRecord {
    std::vector<std::string> fields;
    int start_line = 0;
};

// Splits the whole text into records. Quoted fields may contain separators,
// quotes (doubled) and line breaks.
std::vector<CsvRecord> read_csv_records(const std::string& text) {
    std::vector<CsvRecord> records;
    CsvRecord current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;  // true once the current record has any content
    int line = 1;
    current.start_line = 1;

    const auto push_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
    };
    const auto push_record = [&] {
        push_field();
        records.push_back(std::move(current));
        current = CsvRecord{};
        field_started = false;
    };

    for (size_t k = 0; k < text.size(); ++k) {
        const char c = text[k];
        if (in_quotes) {
            if (c == '"') {
                if (k + 1 < text.size() && text[k + 1] == '"') {
                    field.push_back('"');
                    ++k;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty())
                    throw ParseError("CSV: quote inside unquoted field", line);
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                push_field();
                field_started = true;
                break;
            case '\r':
                if (k + 1 < text.size() && text[k + 1] == '\n') ++k;
                [[fallthrough]];
            case '\n':
                if (field_started || !field.empty() || !current.fields.empty()) push_record();
                ++line;
                current.start_line = line;
                break;
            default:
                field.push_back(c);
                field_started = true;
                break;
        }
    }
    if (in_quotes) throw ParseError("CSV: unterminated quoted field", line);
    if (field_started || !field.empty() || !current.fields.empty()) push_record();
    return records;
}

std::optional<std::string> opt_field(std::string value) {
    if (value.empty()) return std::nullopt;
    return value;
}

void write_csv_field(std::ostream& out, const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) {
        out << value;
        return;
    }
    out << '"';
    for (char c : value) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

}  // namespace

EventLog parse_csv(std::istream& in, const std::string& source_name) {
    const std::vector<CsvRecord> records = read_csv_records(slurp(in));
    if (records.empty()) throw SchemaError("CSV: empty input, expected a header row");

    if (records[0].fields != kCsvHeader) {
        std::string got;
        for (size_t k = 0; k < records[0].fields.size(); ++k)
            got += (k ? "," : "") + records[0].fields[k];
        throw SchemaError(
            "CSV: bad header \"" + got +
            "\"; expected \"case_id,activity,lifecycle,resource,group,timestamp\"");
    }

    EventLog log;
    log.source_name = source_name;
    std::unordered_map<std::string, size_t> trace_index;

    for (size_t r = 1; r < records.size(); ++r) {
        const CsvRecord& rec = records[r];
        const std::string where = "CSV row " + std::to_string(r);
        if (rec.fields.size() != kCsvHeader.size())
            throw ParseError(where + ": expected " + std::to_string(kCsvHeader.size()) +
                                 " fields, got " + std::to_string(rec.fields.size()),
                             rec.start_line);

        const std::string& case_id = rec.fields[0];
        if (case_id.empty()) throw SchemaError(where + ": empty case_id");
        if (rec.fields[1].empty()) throw SchemaError(where + ": empty activity");

        Event event;
        event.activity = rec.fields[1];
        event.lifecycle = opt_field(rec.fields[2]);
        event.resource = opt_field(rec.fields[3]);
        event.group = opt_field(rec.fields[4]);
        if (!rec.fields[5].empty()) {
            try {
                event.timestamp_ms = parse_timestamp(rec.fields[5]);
            } catch (const ParseError& e) {
                throw ParseError(where + ": bad timestamp \"" + rec.fields[5] + "\": " + e.what(),
                                 rec.start_line);
            }
        }

        auto [it, inserted] = trace_index.emplace(case_id, log.traces.size());
        if (inserted) log.traces.push_back(Trace{case_id, {}});
        log.traces[it->second].events.push_back(std::move(event));
    }
    return log;
}

void write_csv(const EventLog& log, std::ostream& out) {
    out << "case_id,activity,lifecycle,resource,group,timestamp\n";
    for (const auto& trace : log.traces) {
        for (const auto& event : trace.events) {
            write_csv_field(out, trace.case_id);
            out << ',';
            write_csv_field(out, event.activity);
            out << ',';
            if (event.lifecycle) write_csv_field(out, *event.lifecycle);
            out << ',';
            if (event.resource) write_csv_field(out, *event.resource);
            out << ',';
            if (event.group) write_csv_field(out, *event.group);
            out << ',';
            if (event.timestamp_ms) out << format_timestamp(*event.timestamp_ms);
            out << '\n';
        }
    }
    if (!out) throw IoError("failed to write CSV output");
}

// ---------------------------------------------------------------------------
// Token encoding
// ---------------------------------------------------------------------------

namespace {

void check_separator_free(const std::string& value, const std::string& separator,
                          const std::string& what, const std::string& trace_id, size_t ordinal) {
    if (value.find(separator) != std::string::npos)
        throw EncodingError("encode: " + what + " \"" + value + "\" in trace \"" + trace_id +
                            "\", event " + std::to_string(ordinal) +
                            " contains the separator \"" + separator + "\"");
}

}  // namespace

EncodedLog encode(const EventLog& log, const TokenSchema& schema) {
    if (schema.separator.empty()) throw Error("encode: separator must be non-empty");
    if (schema.eoc_token.empty()) throw Error("encode: end-of-case token must be non-empty");

    EncodedLog out;
    out.input_tokens.reserve(log.traces.size());
    out.target_tokens.reserve(log.traces.size());

    for (const auto& trace : log.traces) {
        std::vector<std::string> inputs;
        std::vector<std::string> targets;
        inputs.reserve(trace.events.size() + 1);
        targets.reserve(trace.events.size() + 1);

        for (size_t k = 0; k < trace.events.size(); ++k) {
            const Event& event = trace.events[k];
            const size_t ordinal = k + 1;
            if (event.activity.empty())
                throw SchemaError("encode: empty activity in trace \"" + trace.case_id +
                                  "\", event " + std::to_string(ordinal));
            check_separator_free(event.activity, schema.separator, "activity", trace.case_id,
                                 ordinal);

            std::string token = event.activity;
            if (schema.use_lifecycle) {
                const std::string lifecycle = event.lifecycle.value_or("NONE");
                check_separator_free(lifecycle, schema.separator, "lifecycle", trace.case_id,
                                     ordinal);
                token += schema.separator;
                token += lifecycle;
            }

            std::string target = token;
            if (schema.resource_mode != ResourceMode::None) {
                const bool use_group = schema.resource_field == ResourceField::Group;
                const auto& field = use_group ? event.group : event.resource;
                const char* field_name = use_group ? "org:group" : "org:resource";
                if (!field)
                    throw SchemaError(std::string("encode: schema selects ") + field_name +
                                      " but it is missing in trace \"" + trace.case_id +
                                      "\", event " + std::to_string(ordinal));
                check_separator_free(*field, schema.separator, field_name, trace.case_id, ordinal);
                token += schema.separator;
                token += *field;
                if (schema.resource_mode == ResourceMode::PredictorAndPredictand) target = token;
            }

            inputs.push_back(std::move(token));
            targets.push_back(std::move(target));
        }

        inputs.push_back(schema.eoc_token);
        targets.push_back(schema.eoc_token);
        out.input_tokens.push_back(std::move(inputs));
        out.target_tokens.push_back(std::move(targets));
    }
    return out;
}

std::vector<std::vector<std::string>> encode_durations(const EventLog& log, int64_t quantum_ms,
                                                       const std::string& eoc_token) {
    if (quantum_ms <= 0) throw Error("encode_durations: quantum must be positive");
    if (eoc_token.empty()) throw Error("encode_durations: end-of-case token must be non-empty");

    const auto lifecycle_kind = [](const Event& e) -> int {
        if (!e.lifecycle) return 0;
        std::string lower = *e.lifecycle;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (lower == "start") return 1;
        if (lower == "complete") return 2;
        return 0;
    };

    std::vector<std::vector<std::string>> out;
    out.reserve(log.traces.size());

    for (const auto& trace : log.traces) {
        std::vector<std::string> tokens;
        std::optional<std::pair<std::string, int64_t>> open;  // (activity, start time)

        for (size_t k = 0; k < trace.events.size(); ++k) {
            const Event& event = trace.events[k];
            const std::string where =
                "trace \"" + trace.case_id + "\", event " + std::to_string(k + 1);
            const int kind = lifecycle_kind(event);
            if (kind == 0)
                throw EncodingError("encode_durations: " + where +
                                    " has lifecycle \"" + event.lifecycle.value_or("") +
                                    "\", expected Start or Complete");
            if (!event.timestamp_ms)
                throw EncodingError("encode_durations: " + where + " has no timestamp");

            if (kind == 1) {
                if (open)
                    throw EncodingError("encode_durations: " + where + ": activity \"" +
                                        event.activity + "\" starts while \"" + open->first +
                                        "\" is still open (overlapping intervals)");
                open = {event.activity, *event.timestamp_ms};
            } else {
                if (!open)
                    throw EncodingError("encode_durations: " + where + ": Complete for \"" +
                                        event.activity + "\" without a matching Start");
                if (open->first != event.activity)
                    throw EncodingError("encode_durations: " + where + ": Complete for \"" +
                                        event.activity + "\" while \"" + open->first +
                                        "\" is open");
                const int64_t duration = *event.timestamp_ms - open->second;
                if (duration < 0)
                    throw EncodingError("encode_durations: " + where +
                                        ": Complete precedes Start of \"" + event.activity + "\"");
                const int64_t copies =
                    duration <= 0 ? 1 : (duration + quantum_ms - 1) / quantum_ms;
                for (int64_t n = 0; n < copies; ++n) tokens.push_back(event.activity);
                open.reset();
            }
        }
        if (open)
            throw EncodingError("encode_durations: trace \"" + trace.case_id + "\": activity \"" +
                                open->first + "\" has Start without Complete");

        tokens.push_back(eoc_token);
        out.push_back(std::move(tokens));
    }
    return out;
}

}  // namespace procrnn
