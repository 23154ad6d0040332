#include "gradeloop/exercise_format/odt.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <utility>

namespace gradeloop::odt {
namespace {

constexpr std::string_view kOfficeNamespace = "urn:oasis:names:tc:opendocument:xmlns:office:1.0";
constexpr std::size_t kMaxContentSize = 64u << 20;
constexpr std::size_t kMaxDepth = 512;

[[noreturn]] void malformed(const std::string& what) { throw OdtError(OdtErrc::MalformedMarkup, what); }

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_name_char(char c) {
    return c == ':' || c == '_' || c == '-' || c == '.' || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || static_cast<unsigned char>(c) >= 0x80;
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xc0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xe0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    } else {
        out += static_cast<char>(0xf0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
        out += static_cast<char>(0x80 | (cp & 0x3f));
    }
}

std::string decode_entities(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '&') {
            out += raw[i];
            continue;
        }
        const auto semi = raw.find(';', i);
        if (semi == std::string_view::npos) malformed("unterminated entity reference");
        std::string_view name = raw.substr(i + 1, semi - i - 1);
        if (name == "lt") out += '<';
        else if (name == "gt") out += '>';
        else if (name == "amp") out += '&';
        else if (name == "quot") out += '"';
        else if (name == "apos") out += '\'';
        else if (name.size() > 1 && name[0] == '#') {
            const bool hex = name[1] == 'x' || name[1] == 'X';
            std::string_view digits = name.substr(hex ? 2 : 1);
            if (digits.empty() || digits.size() > 8) malformed("bad character reference");
            std::uint32_t cp = 0;
            for (char c : digits) {
                std::uint32_t d;
                if (c >= '0' && c <= '9') d = static_cast<std::uint32_t>(c - '0');
                else if (hex && c >= 'a' && c <= 'f') d = static_cast<std::uint32_t>(c - 'a' + 10);
                else if (hex && c >= 'A' && c <= 'F') d = static_cast<std::uint32_t>(c - 'A' + 10);
                else malformed("bad character reference");
                cp = cp * (hex ? 16 : 10) + d;
            }
            if (cp == 0 || cp > 0x10ffff) malformed("character reference out of range");
            append_utf8(out, cp);
        } else {
            malformed("unknown entity &" + std::string(name) + ";");
        }
        i = semi;
    }
    return out;
}

struct Attribute {
    std::string name;
    std::string value;
};

struct OpenElement {
    std::string qname;
    std::size_t bindings_before = 0;
    std::optional<std::size_t> paragraph;  // index when this is a text:p / text:h
    bool skipped = false;                  // subtree ignored for text purposes
};

/// Streaming pass over a content part that collects paragraphs with their
/// byte spans. Only well-formedness is checked, not the ODF schema.
class ContentScanner {
public:
    explicit ContentScanner(std::string_view xml) : xml_(xml) {}

    std::vector<Paragraph> run() {
        while (pos_ < xml_.size()) {
            if (xml_[pos_] == '<') {
                markup();
            } else {
                const auto next = xml_.find('<', pos_);
                const std::size_t stop = next == std::string_view::npos ? xml_.size() : next;
                characters(decode_entities(xml_.substr(pos_, stop - pos_)));
                pos_ = stop;
            }
        }
        if (!stack_.empty()) malformed("unclosed element <" + stack_.back().qname + ">");
        if (!seen_root_) malformed("no root element");
        return std::move(paragraphs_);
    }

private:
    void markup() {
        if (starts_with("<?")) {
            skip_past("?>");
        } else if (starts_with("<!--")) {
            skip_past("-->");
        } else if (starts_with("<![CDATA[")) {
            const std::size_t body = pos_ + 9;
            const auto close = xml_.find("]]>", body);
            if (close == std::string_view::npos) malformed("unterminated CDATA section");
            characters(std::string(xml_.substr(body, close - body)));
            pos_ = close + 3;
        } else if (starts_with("<!")) {
            malformed("document type declarations are not accepted");
        } else if (starts_with("</")) {
            end_tag();
        } else {
            start_tag();
        }
    }

    void start_tag() {
        const std::size_t tag_begin = pos_;
        ++pos_;
        std::string qname = name();
        if (qname.empty()) malformed("empty element name");
        if (stack_.empty() && seen_root_) malformed("content after root element");
        seen_root_ = true;

        std::vector<Attribute> attributes;
        bool self_closing = false;
        for (;;) {
            skip_spaces();
            if (pos_ >= xml_.size()) malformed("unterminated start tag");
            if (xml_[pos_] == '>') {
                ++pos_;
                break;
            }
            if (starts_with("/>")) {
                pos_ += 2;
                self_closing = true;
                break;
            }
            Attribute attr;
            attr.name = name();
            if (attr.name.empty()) malformed("bad attribute in <" + qname + ">");
            skip_spaces();
            if (pos_ >= xml_.size() || xml_[pos_] != '=') malformed("attribute without value");
            ++pos_;
            skip_spaces();
            if (pos_ >= xml_.size() || (xml_[pos_] != '"' && xml_[pos_] != '\'')) malformed("unquoted attribute");
            const char quote = xml_[pos_++];
            const auto close = xml_.find(quote, pos_);
            if (close == std::string_view::npos) malformed("unterminated attribute value");
            attr.value = decode_entities(xml_.substr(pos_, close - pos_));
            pos_ = close + 1;
            attributes.push_back(std::move(attr));
        }

        OpenElement element;
        element.qname = qname;
        element.bindings_before = bindings_.size();
        for (const Attribute& a : attributes) {
            if (a.name == "xmlns") bindings_.emplace_back("", a.value);
            else if (a.name.rfind("xmlns:", 0) == 0) bindings_.emplace_back(a.name.substr(6), a.value);
        }
        const auto [prefix, local] = split_qname(qname);
        const std::string_view ns = resolve(prefix);
        const bool parent_skipped = !stack_.empty() && stack_.back().skipped;
        element.skipped = parent_skipped || (ns == kOfficeNamespace && (local == "annotation")) ||
                          (ns == kTextNamespace && local == "tracked-changes");

        if (!element.skipped && ns == kTextNamespace) {
            if (local == "p" || local == "h") {
                Paragraph p;
                p.begin = tag_begin;
                p.prefix = std::string(prefix);
                element.paragraph = paragraphs_.size();
                paragraphs_.push_back(std::move(p));
                open_paragraphs_.push_back(*element.paragraph);
                pending_space_.push_back(false);
            } else if (local == "s") {
                std::size_t count = 1;
                for (const Attribute& a : attributes) {
                    if (split_qname(a.name).second == "c") {
                        count = 0;
                        for (char c : a.value) {
                            if (c < '0' || c > '9') malformed("bad text:s count");
                            count = count * 10 + static_cast<std::size_t>(c - '0');
                            if (count > 100000) malformed("text:s count too large");
                        }
                    }
                }
                literal(std::string(count, ' '));
            } else if (local == "tab") {
                literal("\t");
            } else if (local == "line-break") {
                literal("\n");
                if (!pending_space_.empty()) pending_space_.back() = true;
            }
        }

        if (self_closing) {
            if (element.paragraph) {
                paragraphs_[*element.paragraph].end = pos_;
                open_paragraphs_.pop_back();
                pending_space_.pop_back();
            }
            bindings_.resize(element.bindings_before);
            return;
        }
        if (stack_.size() >= kMaxDepth) malformed("element nesting too deep");
        stack_.push_back(std::move(element));
    }

    void end_tag() {
        pos_ += 2;
        std::string qname = name();
        skip_spaces();
        if (pos_ >= xml_.size() || xml_[pos_] != '>') malformed("unterminated end tag");
        ++pos_;
        if (stack_.empty() || stack_.back().qname != qname) malformed("mismatched end tag </" + qname + ">");
        const OpenElement& element = stack_.back();
        if (element.paragraph) {
            paragraphs_[*element.paragraph].end = pos_;
            open_paragraphs_.pop_back();
            pending_space_.pop_back();
        }
        bindings_.resize(element.bindings_before);
        stack_.pop_back();
    }

    void characters(const std::string& text) {
        if (open_paragraphs_.empty() || stack_.empty() || stack_.back().skipped) return;
        std::string& target = paragraphs_[open_paragraphs_.back()].text;
        char& pending = pending_space_.back();
        for (char c : text) {
            if (is_space(c)) {
                // Collapse runs; leading space at paragraph start is dropped.
                if (pending || target.empty()) continue;
                target += ' ';
                pending = 1;
            } else {
                target += c;
                pending = 0;
            }
        }
    }

    void literal(const std::string& text) {
        if (open_paragraphs_.empty()) return;
        paragraphs_[open_paragraphs_.back()].text += text;
        pending_space_.back() = false;
    }

    std::string_view resolve(std::string_view prefix) const {
        if (prefix == "xml") return "http://www.w3.org/XML/1998/namespace";
        for (auto it = bindings_.rbegin(); it != bindings_.rend(); ++it)
            if (it->first == prefix) return it->second;
        return {};
    }

    static std::pair<std::string_view, std::string_view> split_qname(std::string_view qname) {
        const auto colon = qname.find(':');
        if (colon == std::string_view::npos) return {std::string_view{}, qname};
        return {qname.substr(0, colon), qname.substr(colon + 1)};
    }

    std::string name() {
        const std::size_t begin = pos_;
        while (pos_ < xml_.size() && is_name_char(xml_[pos_])) ++pos_;
        return std::string(xml_.substr(begin, pos_ - begin));
    }

    void skip_spaces() {
        while (pos_ < xml_.size() && is_space(xml_[pos_])) ++pos_;
    }

    bool starts_with(std::string_view s) const { return xml_.substr(pos_, s.size()) == s; }

    void skip_past(std::string_view terminator) {
        const auto at = xml_.find(terminator, pos_);
        if (at == std::string_view::npos) malformed("unterminated markup");
        pos_ = at + terminator.size();
    }

    std::string_view xml_;
    std::size_t pos_ = 0;
    bool seen_root_ = false;
    std::vector<OpenElement> stack_;
    std::vector<std::pair<std::string, std::string>> bindings_;
    std::vector<Paragraph> paragraphs_;
    std::vector<std::size_t> open_paragraphs_;
    std::vector<char> pending_space_;  // per open paragraph: last char was a collapsible space
};

void escape_into(std::string& out, std::string_view text) {
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
}

constexpr std::string_view kManifest =
    R"(<?xml version="1.0" encoding="UTF-8"?>)"
    "\n"
    R"(<manifest:manifest xmlns:manifest="urn:oasis:names:tc:opendocument:xmlns:manifest:1.0" manifest:version="1.2">)"
    R"(<manifest:file-entry manifest:full-path="/" manifest:version="1.2" manifest:media-type="application/vnd.oasis.opendocument.text"/>)"
    R"(<manifest:file-entry manifest:full-path="content.xml" manifest:media-type="text/xml"/>)"
    R"(<manifest:file-entry manifest:full-path="styles.xml" manifest:media-type="text/xml"/>)"
    R"(</manifest:manifest>)";

constexpr std::string_view kStyles =
    R"(<?xml version="1.0" encoding="UTF-8"?>)"
    "\n"
    R"(<office:document-styles xmlns:office="urn:oasis:names:tc:opendocument:xmlns:office:1.0" office:version="1.2"/>)";

constexpr std::string_view kContentHead =
    R"(<?xml version="1.0" encoding="UTF-8"?>)"
    "\n"
    R"(<office:document-content xmlns:office="urn:oasis:names:tc:opendocument:xmlns:office:1.0" )"
    R"(xmlns:text="urn:oasis:names:tc:opendocument:xmlns:text:1.0" office:version="1.2">)"
    R"(<office:body><office:text>)";

constexpr std::string_view kContentTail = R"(</office:text></office:body></office:document-content>)";

}  // namespace

std::string read_content_part(ByteView container) {
    std::optional<zip::Reader> reader;
    try {
        reader.emplace(container);
    } catch (const zip::ZipError& e) {
        throw OdtError(OdtErrc::NotAnOdtContainer, std::string("not an ODT container: ") + e.what());
    }
    const zip::Entry* content = reader->find(kContentPart);
    if (content == nullptr) throw OdtError(OdtErrc::MissingContentPart, "container has no content.xml");
    try {
        return reader->read(*content, kMaxContentSize);
    } catch (const zip::ZipError& e) {
        throw OdtError(OdtErrc::NotAnOdtContainer, std::string("unreadable content part: ") + e.what());
    }
}

FlatDocument flatten_content(std::string_view content_xml) {
    FlatDocument doc;
    doc.paragraphs = ContentScanner(content_xml).run();
    for (std::size_t i = 0; i < doc.paragraphs.size(); ++i) {
        std::string_view text = doc.paragraphs[i].text;
        std::size_t start = 0;
        for (;;) {
            const auto nl = text.find('\n', start);
            const std::string_view line =
                text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
            doc.text.append(line);
            doc.text += '\n';
            doc.line_paragraph.push_back(i);
            if (nl == std::string_view::npos) break;
            start = nl + 1;
        }
    }
    return doc;
}

std::string parse_odt(ByteView container) { return flatten_content(read_content_part(container)).text; }

std::string paragraph_xml(std::string_view prefix, std::string_view text) {
    const std::string tag = prefix.empty() ? "p" : std::string(prefix) + ":p";
    const std::string ns = prefix.empty() ? "" : std::string(prefix) + ":";
    std::string out = "<" + tag + ">";
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == ' ') {
            std::size_t run = 1;
            while (i + run < text.size() && text[i + run] == ' ') ++run;
            const bool at_start = i == 0 || text[i - 1] == '\n';
            // A single interior space survives whitespace collapsing as-is.
            if (run == 1 && !at_start) {
                out += ' ';
            } else {
                std::size_t literal = at_start ? 0 : 1;
                if (literal) out += ' ';
                const std::size_t encoded = run - literal;
                out += "<" + ns + "s";
                if (encoded > 1) out += " " + ns + "c=\"" + std::to_string(encoded) + "\"";
                out += "/>";
            }
            i += run;
            continue;
        }
        if (c == '\t') out += "<" + ns + "tab/>";
        else if (c == '\n') out += "<" + ns + "line-break/>";
        else if (static_cast<unsigned char>(c) >= 0x20) escape_into(out, text.substr(i, 1));
        ++i;
    }
    out += "</" + tag + ">";
    return out;
}

std::string apply_insertions(std::string_view content_xml, std::vector<Insertion> insertions) {
    std::stable_sort(insertions.begin(), insertions.end(),
                     [](const Insertion& a, const Insertion& b) { return a.offset < b.offset; });
    std::string out;
    std::size_t total = content_xml.size();
    for (const Insertion& ins : insertions) total += ins.xml.size();
    out.reserve(total);
    std::size_t cursor = 0;
    for (const Insertion& ins : insertions) {
        if (ins.offset > content_xml.size()) throw std::out_of_range("insertion offset past end of content");
        out.append(content_xml.substr(cursor, ins.offset - cursor));
        out += ins.xml;
        cursor = ins.offset;
    }
    out.append(content_xml.substr(cursor));
    return out;
}

Bytes replace_content_part(ByteView container, std::string_view content_xml) {
    std::optional<zip::Reader> reader;
    try {
        reader.emplace(container);
    } catch (const zip::ZipError& e) {
        throw OdtError(OdtErrc::NotAnOdtContainer, std::string("not an ODT container: ") + e.what());
    }
    if (reader->find(kContentPart) == nullptr)
        throw OdtError(OdtErrc::MissingContentPart, "container has no content.xml");
    zip::Writer writer;
    for (const zip::Entry& entry : reader->entries()) {
        if (entry.name == kContentPart) writer.replace(entry, content_xml);
        else writer.copy_raw(*reader, entry);
    }
    return std::move(writer).finish();
}

Bytes make_document(std::span<const std::string> paragraphs) {
    std::string content(kContentHead);
    for (const std::string& p : paragraphs) content += paragraph_xml("text", p);
    content += kContentTail;

    zip::Writer writer;
    writer.add_stored("mimetype", kTextMediaType);
    writer.add_deflated("content.xml", content);
    writer.add_deflated("styles.xml", kStyles);
    writer.add_deflated("META-INF/manifest.xml", kManifest);
    return std::move(writer).finish();
}

}  // namespace gradeloop::odt
