#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gradeloop/exercise_format/zip_archive.hpp"

namespace gradeloop::odt {

enum class OdtErrc {
    NotAnOdtContainer,
    MissingContentPart,
    MalformedMarkup,
};

class OdtError : public std::runtime_error {
public:
    OdtError(OdtErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    OdtErrc code() const noexcept { return code_; }

private:
    OdtErrc code_;
};

inline constexpr std::string_view kContentPart = "content.xml";
inline constexpr std::string_view kTextMediaType = "application/vnd.oasis.opendocument.text";
inline constexpr std::string_view kTextNamespace = "urn:oasis:names:tc:opendocument:xmlns:text:1.0";

/// A text:p or text:h element located in the content part.
struct Paragraph {
    std::size_t begin = 0;  // offset of '<' of the start tag
    std::size_t end = 0;    // offset one past the closing '>'
    std::string prefix;     // namespace prefix used on the element, e.g. "text"
    std::string text;       // normalized character content; '\n' for line breaks
};

/// Flattened view of a content part. Every line of `text` is terminated by
/// '\n' and belongs to exactly one paragraph (`line_paragraph[i]`).
struct FlatDocument {
    std::string text;
    std::vector<std::size_t> line_paragraph;
    std::vector<Paragraph> paragraphs;
};

/// Paragraph text of an ODT container, one paragraph per line, in document
/// order. Markup is stripped and ODF whitespace rules applied.
std::string parse_odt(ByteView container);

std::string read_content_part(ByteView container);
FlatDocument flatten_content(std::string_view content_xml);

/// Serialized paragraph element carrying `text` under the given namespace
/// prefix. Space runs, tabs and line breaks are encoded as ODF elements so the
/// text flattens back unchanged.
std::string paragraph_xml(std::string_view prefix, std::string_view text);

struct Insertion {
    std::size_t offset = 0;
    std::string xml;
};

/// Splices fragments into `content_xml`. Insertions at the same offset keep
/// their relative order.
std::string apply_insertions(std::string_view content_xml, std::vector<Insertion> insertions);

/// Same container with the content part swapped out. Every other member is
/// copied byte for byte, in the original order.
Bytes replace_content_part(ByteView container, std::string_view content_xml);

/// Minimal text document with one paragraph per element of `paragraphs`.
/// Output is deterministic for a given input.
Bytes make_document(std::span<const std::string> paragraphs);

}  // namespace gradeloop::odt
