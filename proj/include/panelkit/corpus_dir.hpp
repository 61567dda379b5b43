#pragma once

// On-disk corpus directories.
//
// A "raw" corpus directory holds annotation documents plus page images in the
// layout used by the reference dataset, and is also what the `synth` tool
// writes, so downstream stages never care whether pages are real or
// synthetic:
//
//   <root>/annotations/<title>.xml
//   <root>/images/<title>/<page>.png   (zero-padded or plain index; png/jpg)
//   <root>/metadata.csv                (title,genre,publisher; optional)
//
// RawCorpus renders the requested ablation of each page on the fly, which
// avoids materializing a full rendered tree when experimenting directly on a
// raw directory.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "annotation.hpp"
#include "classifier.hpp"
#include "corpus.hpp"
#include "errors.hpp"
#include "image_io.hpp"
#include "render.hpp"

namespace panelkit {

inline std::filesystem::path page_image_path(const std::filesystem::path& root,
                                             const std::string& title, int index) {
    const std::filesystem::path dir = root / "images" / title;
    char padded[16];
    std::snprintf(padded, sizeof padded, "%03d", index);
    for (const std::string stem : {std::string(padded), std::to_string(index)})
        for (const char* ext : {".png", ".jpg", ".jpeg"}) {
            std::filesystem::path p = dir / (stem + ext);
            if (std::filesystem::exists(p)) return p;
        }
    throw CorpusMissingError("no page image for " + title + "/" + std::to_string(index) +
                             " under " + dir.string());
}

// Page dimensions read from the image files themselves, keyed by page index.
inline PageDims image_dims_for(const std::filesystem::path& root, const std::string& title) {
    PageDims dims;
    const std::filesystem::path dir = root / "images" / title;
    if (!std::filesystem::is_directory(dir)) return dims;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string stem = entry.path().stem().string();
        if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](unsigned char c) {
                return std::isdigit(c);
            }))
            continue;
        dims[std::stoi(stem)] = read_image_size(entry.path());
    }
    return dims;
}

inline std::vector<std::filesystem::path> annotation_files(const std::filesystem::path& root) {
    const std::filesystem::path dir = root / "annotations";
    if (!std::filesystem::is_directory(dir))
        throw IoError("no annotations directory under " + root.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".xml")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no .xml annotation files under " + dir.string());
    return files;
}

inline MetadataMap corpus_metadata(const std::filesystem::path& root) {
    const std::filesystem::path csv = root / "metadata.csv";
    if (!std::filesystem::exists(csv)) return {};
    return load_metadata_csv_file(csv);
}

// Parse every annotation document under <root>/annotations. When with_dims is
// set, page dimensions are cross-checked against the stored image files.
inline std::vector<BookAnnotation> load_raw_books(const std::filesystem::path& root,
                                                  bool with_dims = false) {
    const MetadataMap meta = corpus_metadata(root);
    std::vector<BookAnnotation> books;
    for (const auto& file : annotation_files(root)) {
        std::ifstream in(file);
        if (!in) throw IoError("cannot open " + file.string());
        std::stringstream buf;
        buf << in.rdbuf();
        PageDims dims;
        if (with_dims) dims = image_dims_for(root, file.stem().string());
        books.push_back(parse_book(buf.str(), dims, meta));
    }
    return books;
}

// Write a generated corpus to disk in the raw layout above.
inline void write_raw_corpus(const std::filesystem::path& root, const SyntheticCorpus& corpus) {
    std::filesystem::create_directories(root / "annotations");
    for (const auto& book : corpus.books) {
        write_book_file(root / "annotations" / (book.title + ".xml"), book);
        const std::filesystem::path img_dir = root / "images" / book.title;
        std::filesystem::create_directories(img_dir);
        for (const auto& page : book.pages) {
            char name[16];
            std::snprintf(name, sizeof name, "%03d.png", page.index);
            write_png(img_dir / name, corpus.page_raster(book.title, page.index));
        }
    }
    write_metadata_csv(root / "metadata.csv", corpus.books);
}

// DataSource over a raw corpus directory. Only pages with frames are exposed,
// matching the split builders.
class RawCorpus final : public DataSource {
public:
    RawCorpus(std::filesystem::path root, TaskKind task, AblationSpec spec,
              RenderConfig render_cfg = {})
        : root_(std::move(root)), spec_(spec), render_cfg_(render_cfg) {
        books_ = load_raw_books(root_);
        label_map_ = build_label_map(books_, task);
        for (const auto& b : books_) {
            if (!book_in_task(b, task)) continue;
            const int label = label_map_.id_of(class_label_of(b, task));
            for (const auto& p : b.pages)
                if (p.has_frames()) entries_[{b.title, p.index}] = Entry{&b, &p, label};
        }
    }

    RawCorpus(RawCorpus&&) = delete; // entries_ points into books_

    int class_count() const override { return label_map_.size(); }
    const LabelMap& labels() const override { return label_map_; }
    int label_of(const PageRef& ref) const override { return entry(ref).label; }

    ImageU8 image_for(const PageRef& ref) const override {
        const Entry& e = entry(ref);
        // Frame-only output never samples the source pixels, so skip the read.
        ImageU8 raster =
            spec_.mode == AblationMode::FrameOnly
                ? ImageU8(e.page->width, e.page->height, render_cfg_.canvas_value)
                : read_image_gray(page_image_path(root_, ref.title, ref.page_index));
        return render_page(raster, *e.page, spec_, render_cfg_, e.book->title).pixels;
    }

    const std::vector<BookAnnotation>& books() const { return books_; }

private:
    struct Entry {
        const BookAnnotation* book = nullptr;
        const PageAnnotation* page = nullptr;
        int label = 0;
    };

    const Entry& entry(const PageRef& ref) const {
        const auto it = entries_.find(ref);
        if (it == entries_.end()) throw CorpusMissingError("no page " + ref.str() + " in corpus");
        return it->second;
    }

    std::filesystem::path root_;
    AblationSpec spec_;
    RenderConfig render_cfg_;
    std::vector<BookAnnotation> books_;
    LabelMap label_map_;
    std::map<PageRef, Entry> entries_;
};

} // namespace panelkit
