#pragma once

#include <stdexcept>
#include <string>

namespace panelkit {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// annotation_model
class SchemaError : public Error {
public:
    using Error::Error;
};

class BoundsError : public Error {
public:
    BoundsError(int page_index, std::string region_id, const std::string& msg)
        : Error(msg), page_index(page_index), region_id(std::move(region_id)) {}
    int page_index;
    std::string region_id;
};

class MissingMetadataError : public Error {
public:
    using Error::Error;
};

// page_render
class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

class EmptyFrameListError : public Error {
public:
    using Error::Error;
};

// layout_perturb
class DegenerateBoxError : public Error {
public:
    explicit DegenerateBoxError(const std::string& msg, std::string frame_id = {})
        : Error(msg), frame_id(std::move(frame_id)) {}
    std::string frame_id;
};

// corpus
class InsufficientPagesError : public Error {
public:
    using Error::Error;
};

class SingleWorkClassError : public Error {
public:
    using Error::Error;
};

// classifier
class CorpusMissingError : public Error {
public:
    using Error::Error;
};

class ClassCountMismatchError : public Error {
public:
    using Error::Error;
};

class ModelTaskMismatchError : public Error {
public:
    using Error::Error;
};

// explain
class LayerNotFoundError : public Error {
public:
    using Error::Error;
};

class NonScalarTargetError : public Error {
public:
    using Error::Error;
};

// eval_report
class EmptyPredictionsError : public Error {
public:
    using Error::Error;
};

class IdOutOfRangeError : public Error {
public:
    using Error::Error;
};

// plumbing
class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace panelkit
