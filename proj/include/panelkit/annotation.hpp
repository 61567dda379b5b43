#pragma once

// Object model for Manga109-style annotation documents: one book per XML
// file, pages carrying frame/text/face/body rectangles in page pixel
// coordinates. Genre and publisher ride in a sidecar CSV keyed by title.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "panelkit/errors.hpp"

namespace panelkit {

struct BBox {
    int xmin = 0;
    int ymin = 0;
    int xmax = 0;
    int ymax = 0;

    int width() const { return xmax - xmin; }
    int height() const { return ymax - ymin; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

enum class RegionKind { Frame, Text, Face, Body };

inline const char* to_string(RegionKind k) {
    switch (k) {
        case RegionKind::Frame: return "frame";
        case RegionKind::Text: return "text";
        case RegionKind::Face: return "face";
        case RegionKind::Body: return "body";
    }
    return "?";
}

inline std::optional<RegionKind> region_kind_from(std::string_view name) {
    if (name == "frame") return RegionKind::Frame;
    if (name == "text") return RegionKind::Text;
    if (name == "face") return RegionKind::Face;
    if (name == "body") return RegionKind::Body;
    return std::nullopt;
}

// Face and Body jointly count as "character" regions for masking.
inline bool is_mask_source(RegionKind k) {
    return k == RegionKind::Text || k == RegionKind::Face || k == RegionKind::Body;
}

struct Region {
    std::string id;
    RegionKind kind = RegionKind::Frame;
    BBox box;

    friend bool operator==(const Region&, const Region&) = default;
};

struct PageAnnotation {
    int index = 0;
    int width = 0;
    int height = 0;
    std::vector<Region> regions; // document order

    bool has_frames() const {
        for (const auto& r : regions)
            if (r.kind == RegionKind::Frame) return true;
        return false;
    }

    std::vector<BBox> frame_boxes() const {
        std::vector<BBox> out;
        for (const auto& r : regions)
            if (r.kind == RegionKind::Frame) out.push_back(r.box);
        return out;
    }

    friend bool operator==(const PageAnnotation&, const PageAnnotation&) = default;
};

struct BookAnnotation {
    std::string title;
    std::string genre;
    std::string publisher;
    std::vector<PageAnnotation> pages; // indices strictly increasing

    friend bool operator==(const BookAnnotation&, const BookAnnotation&) = default;
};

struct BookMetadata {
    std::string genre;
    std::string publisher;
};

using MetadataMap = std::map<std::string, BookMetadata>;
using PageDims = std::map<int, std::pair<int, int>>; // page index -> (width, height)

// The 12 genre labels of the reference dataset, kept for table ordering.
inline const std::vector<std::string>& known_genres() {
    static const std::vector<std::string> g = {
        "4-panel", "animal",          "battle", "fantasy", "history", "horror",
        "humor",   "love",            "romantic comedy",   "SF",      "sport",
        "suspense"};
    return g;
}

struct ValidationIssue {
    enum class Kind { Schema, Bounds, DuplicateId, UnknownKind };
    Kind kind = Kind::Schema;
    int page_index = -1;
    std::string region_id;
    std::string message;

    bool is_warning() const { return kind == Kind::UnknownKind; }
};

inline const char* to_string(ValidationIssue::Kind k) {
    switch (k) {
        case ValidationIssue::Kind::Schema: return "schema";
        case ValidationIssue::Kind::Bounds: return "bounds";
        case ValidationIssue::Kind::DuplicateId: return "duplicate-id";
        case ValidationIssue::Kind::UnknownKind: return "unknown-kind";
    }
    return "?";
}

struct ParsedBook {
    BookAnnotation book;     // regions that failed validation are excluded
    std::vector<ValidationIssue> issues;
};

namespace detail {

inline int attr_int(const boost::property_tree::ptree& node, const char* name, int page_index,
                    const std::string& region_id) {
    auto v = node.get_optional<std::string>(std::string("<xmlattr>.") + name);
    if (!v)
        throw SchemaError("missing attribute '" + std::string(name) + "' (page " +
                          std::to_string(page_index) + ", region '" + region_id + "')");
    try {
        size_t pos = 0;
        const int out = std::stoi(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing junk");
        return out;
    } catch (const std::exception&) {
        throw SchemaError("attribute '" + std::string(name) + "' is not an integer: '" + *v + "'");
    }
}

} // namespace detail

// Parses and validates without throwing on bad regions; the validate CLI
// reports every issue from here. Strict parse_book wraps this.
inline ParsedBook parse_book_lenient(const std::string& xml_text, const PageDims& image_dims = {},
                                     const MetadataMap& metadata = {}) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(xml_text);
        pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        throw SchemaError(std::string("malformed annotation document: ") + e.what());
    }

    auto book_node = tree.get_child_optional("book");
    if (!book_node) throw SchemaError("document has no <book> element");

    ParsedBook out;
    out.book.title = book_node->get<std::string>("<xmlattr>.title", "");
    if (out.book.title.empty()) throw MissingMetadataError("book has no title");
    if (auto it = metadata.find(out.book.title); it != metadata.end()) {
        out.book.genre = it->second.genre;
        out.book.publisher = it->second.publisher;
    }

    auto pages_node = book_node->get_child_optional("pages");
    if (!pages_node) return out; // zero pages

    int last_index = -1;
    for (const auto& [name, page_node] : *pages_node) {
        if (name == "<xmlattr>") continue;
        if (name != "page") continue;
        PageAnnotation page;
        page.index = detail::attr_int(page_node, "index", -1, "");
        if (page.index <= last_index)
            throw SchemaError("page indices not strictly increasing at index " +
                              std::to_string(page.index));
        last_index = page.index;

        auto w = page_node.get_optional<int>("<xmlattr>.width");
        auto h = page_node.get_optional<int>("<xmlattr>.height");
        if (!w || !h) {
            auto it = image_dims.find(page.index);
            if (it == image_dims.end())
                throw SchemaError("page " + std::to_string(page.index) +
                                  " has no dimensions (document or image map)");
            page.width = it->second.first;
            page.height = it->second.second;
        } else {
            page.width = *w;
            page.height = *h;
        }
        if (page.width <= 0 || page.height <= 0)
            throw SchemaError("page " + std::to_string(page.index) + " has non-positive size");

        std::unordered_set<std::string> seen_ids;
        for (const auto& [rname, rnode] : page_node) {
            if (rname == "<xmlattr>") continue;
            const auto kind = region_kind_from(rname);
            if (!kind) {
                out.issues.push_back({ValidationIssue::Kind::UnknownKind, page.index, "",
                                      "unknown region kind '" + rname + "' skipped"});
                continue;
            }
            Region region;
            region.kind = *kind;
            region.id = rnode.get<std::string>("<xmlattr>.id", "");
            region.box.xmin = detail::attr_int(rnode, "xmin", page.index, region.id);
            region.box.ymin = detail::attr_int(rnode, "ymin", page.index, region.id);
            region.box.xmax = detail::attr_int(rnode, "xmax", page.index, region.id);
            region.box.ymax = detail::attr_int(rnode, "ymax", page.index, region.id);

            if (!region.id.empty() && !seen_ids.insert(region.id).second) {
                out.issues.push_back({ValidationIssue::Kind::DuplicateId, page.index, region.id,
                                      "region id '" + region.id + "' duplicated on page " +
                                          std::to_string(page.index)});
                continue;
            }
            const BBox& b = region.box;
            if (b.xmin < 0 || b.ymin < 0 || b.xmin >= b.xmax || b.ymin >= b.ymax ||
                b.xmax > page.width || b.ymax > page.height) {
                out.issues.push_back(
                    {ValidationIssue::Kind::Bounds, page.index, region.id,
                     "box (" + std::to_string(b.xmin) + "," + std::to_string(b.ymin) + "," +
                         std::to_string(b.xmax) + "," + std::to_string(b.ymax) +
                         ") outside page " + std::to_string(page.width) + "x" +
                         std::to_string(page.height)});
                continue;
            }
            page.regions.push_back(std::move(region));
        }
        out.book.pages.push_back(std::move(page));
    }
    return out;
}

// Strict parse: any non-warning issue throws. Unknown region kinds are
// skipped with a logged warning.
inline BookAnnotation parse_book(const std::string& xml_text, const PageDims& image_dims = {},
                                 const MetadataMap& metadata = {}) {
    ParsedBook parsed = parse_book_lenient(xml_text, image_dims, metadata);
    for (const auto& issue : parsed.issues) {
        if (issue.is_warning()) {
            std::cerr << "[panelkit] warning: " << parsed.book.title << " page "
                      << issue.page_index << ": " << issue.message << "\n";
            continue;
        }
        if (issue.kind == ValidationIssue::Kind::Bounds)
            throw BoundsError(issue.page_index, issue.region_id,
                              parsed.book.title + ": " + issue.message);
        throw SchemaError(parsed.book.title + ": " + issue.message);
    }
    return std::move(parsed.book);
}

inline BookAnnotation parse_book_file(const std::filesystem::path& path,
                                      const PageDims& image_dims = {},
                                      const MetadataMap& metadata = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_book(buf.str(), image_dims, metadata);
}

// Serializes back to the annotation document format. Genre/publisher live in
// the sidecar CSV, not the document, so they are not written here.
inline std::string serialize_book(const BookAnnotation& book) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    pt::ptree& book_node = tree.add_child("book", pt::ptree());
    book_node.put("<xmlattr>.title", book.title);
    pt::ptree& pages_node = book_node.add_child("pages", pt::ptree());
    for (const auto& page : book.pages) {
        pt::ptree page_node;
        page_node.put("<xmlattr>.index", page.index);
        page_node.put("<xmlattr>.width", page.width);
        page_node.put("<xmlattr>.height", page.height);
        for (const auto& r : page.regions) {
            pt::ptree rnode;
            if (!r.id.empty()) rnode.put("<xmlattr>.id", r.id);
            rnode.put("<xmlattr>.xmin", r.box.xmin);
            rnode.put("<xmlattr>.ymin", r.box.ymin);
            rnode.put("<xmlattr>.xmax", r.box.xmax);
            rnode.put("<xmlattr>.ymax", r.box.ymax);
            page_node.add_child(to_string(r.kind), rnode);
        }
        pages_node.add_child("page", page_node);
    }
    std::ostringstream out;
    pt::write_xml(out, tree,
                  pt::xml_writer_settings<std::string>(' ', 2));
    return out.str();
}

inline void write_book_file(const std::filesystem::path& path, const BookAnnotation& book) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << serialize_book(book);
}

inline std::vector<PageAnnotation> filter_pages_with_frames(const BookAnnotation& book) {
    std::vector<PageAnnotation> out;
    for (const auto& page : book.pages)
        if (page.has_frames()) out.push_back(page);
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

} // namespace detail

// Sidecar manifest: UTF-8 CSV with header `title,genre,publisher`.
inline MetadataMap load_metadata_csv(std::istream& in) {
    MetadataMap out;
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("metadata CSV is empty");
    auto header = detail::split_csv_line(line);
    if (header.size() < 3 || header[0] != "title" || header[1] != "genre" ||
        header[2] != "publisher")
        throw SchemaError("metadata CSV header must be 'title,genre,publisher'");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() < 3) throw SchemaError("metadata CSV row with < 3 fields: " + line);
        out[fields[0]] = BookMetadata{fields[1], fields[2]};
    }
    return out;
}

inline MetadataMap load_metadata_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return load_metadata_csv(in);
}

inline void write_metadata_csv(const std::filesystem::path& path,
                               const std::vector<BookAnnotation>& books) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "title,genre,publisher\n";
    for (const auto& b : books) out << b.title << "," << b.genre << "," << b.publisher << "\n";
}

} // namespace panelkit
