#pragma once

#include "rlink/textnorm.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rlink::store {

/// A reference company entity. Optional attributes are empty when absent.
struct Record {
    std::uint32_t id = 0;
    std::string name;
    std::string short_name;
    std::string street;
    std::string city;
    std::string postal;
    std::string country;  // ISO-3166 alpha-2
    std::string sic;      // 1-4 digits

    // clean_light of name / street / city.
    textnorm::CleanText clean_name;
    textnorm::CleanText clean_street;
    textnorm::CleanText clean_city;

    friend bool operator==(const Record&, const Record&) = default;
};

/// Recomputes the clean_* caches from the source fields.
void refresh_caches(Record& r);

bool is_valid_sic(std::string_view sic) noexcept;

struct Address {
    std::string street;
    std::string city;
    std::string postal;
    std::string country;

    bool empty() const noexcept {
        return street.empty() && city.empty() && postal.empty() && country.empty();
    }
};

/// Incoming query. Only `name` is required; everything else may be missing or repeated.
struct QueryRecord {
    std::string name;
    std::vector<std::string> names_alt;
    std::vector<Address> addresses;
    std::vector<std::string> sics;
};

enum class Attribute { Name, ShortName, Street, City, Postal, Country, Sic };

std::string_view to_string(Attribute a) noexcept;
std::optional<Attribute> parse_attribute(std::string_view text) noexcept;

/// Maps source columns onto canonical attributes. Exactly one column maps to Name.
struct DatasetSchema {
    std::vector<std::pair<std::string, Attribute>> columns;
    char delimiter = ',';
    /// When false, mapped optional columns may be absent from the header.
    bool strict = true;

    /// Column names equal to the canonical attribute names.
    static DatasetSchema canonical();
    void validate() const;
};

struct IngestStats {
    std::size_t rows = 0;
    std::size_t records = 0;
    std::size_t dropped_empty_name = 0;
    std::size_t malformed_rows = 0;
    std::size_t invalid_sic = 0;
};

/// Reads delimited text with a header row. Ids are dense, in input order.
std::vector<Record> ingest(std::istream& source, const DatasetSchema& schema, IngestStats* stats = nullptr);

/// Immutable in-memory record collection with O(1) lookup by id.
class EntityStore {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    EntityStore() = default;
    explicit EntityStore(std::vector<Record> records);

    const Record& get(std::uint32_t id) const;
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    auto begin() const noexcept { return records_.begin(); }
    auto end() const noexcept { return records_.end(); }
    const std::vector<Record>& records() const noexcept { return records_; }

    std::string serialize() const;
    static EntityStore deserialize(std::string_view bytes);
    void write(const std::filesystem::path& path) const;
    static EntityStore load(const std::filesystem::path& path);

private:
    std::vector<Record> records_;
};

}  // namespace rlink::store
