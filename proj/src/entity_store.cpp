#include "rlink/entity_store.hpp"

#include "rlink/binary_io.hpp"
#include "rlink/csv.hpp"
#include "rlink/error.hpp"
#include "rlink/murmur3.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>

namespace rlink::store {

namespace {

constexpr std::string_view kMagic = "RLDB";
constexpr std::size_t kHeaderSize = 4 + 4 + 8 + 8;

constexpr std::array<std::pair<Attribute, std::string_view>, 7> kAttributeNames{{
    {Attribute::Name, "name"},
    {Attribute::ShortName, "short_name"},
    {Attribute::Street, "street"},
    {Attribute::City, "city"},
    {Attribute::Postal, "postal"},
    {Attribute::Country, "country"},
    {Attribute::Sic, "sic"},
}};

std::string& field_of(Record& r, Attribute a) {
    switch (a) {
        case Attribute::Name: return r.name;
        case Attribute::ShortName: return r.short_name;
        case Attribute::Street: return r.street;
        case Attribute::City: return r.city;
        case Attribute::Postal: return r.postal;
        case Attribute::Country: return r.country;
        case Attribute::Sic: return r.sic;
    }
    return r.name;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void refresh_caches(Record& r) {
    r.clean_name = textnorm::clean_light(r.name);
    r.clean_street = textnorm::clean_light(r.street);
    r.clean_city = textnorm::clean_light(r.city);
}

bool is_valid_sic(std::string_view sic) noexcept {
    return !sic.empty() && sic.size() <= 4 &&
           std::all_of(sic.begin(), sic.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string_view to_string(Attribute a) noexcept {
    for (const auto& [attr, name] : kAttributeNames) {
        if (attr == a) return name;
    }
    return "unknown";
}

std::optional<Attribute> parse_attribute(std::string_view text) noexcept {
    for (const auto& [attr, name] : kAttributeNames) {
        if (name == text) return attr;
    }
    return std::nullopt;
}

DatasetSchema DatasetSchema::canonical() {
    DatasetSchema s;
    for (const auto& [attr, name] : kAttributeNames) s.columns.emplace_back(std::string(name), attr);
    s.strict = false;
    return s;
}

void DatasetSchema::validate() const {
    const auto names = std::count_if(columns.begin(), columns.end(),
                                     [](const auto& c) { return c.second == Attribute::Name; });
    if (names != 1) {
        throw Error(ErrorCode::SchemaMismatch, "schema must map exactly one column to 'name'");
    }
}

std::vector<Record> ingest(std::istream& source, const DatasetSchema& schema, IngestStats* stats) {
    schema.validate();
    IngestStats local;
    IngestStats& st = stats ? *stats : local;
    st = IngestStats{};

    csv::Reader reader(source, schema.delimiter);
    std::vector<std::string> header;
    while (true) {
        const auto status = reader.next(header);
        if (status == csv::Reader::Status::End) {
            throw Error(ErrorCode::SchemaMismatch, "missing header row");
        }
        if (status == csv::Reader::Status::Row) break;
    }
    for (auto& h : header) h = trim(h);

    // Column positions for every mapped attribute; unmapped columns are ignored.
    std::vector<std::pair<std::size_t, Attribute>> mapping;
    for (const auto& [column, attr] : schema.columns) {
        auto it = std::find(header.begin(), header.end(), column);
        if (it == header.end()) {
            if (attr != Attribute::Name && !schema.strict) continue;
            throw Error(ErrorCode::SchemaMismatch, "column '" + column + "' not found in header");
        }
        mapping.emplace_back(static_cast<std::size_t>(it - header.begin()), attr);
    }

    std::vector<Record> records;
    std::vector<std::string> fields;
    while (true) {
        const auto status = reader.next(fields);
        if (status == csv::Reader::Status::End) break;
        ++st.rows;
        if (status == csv::Reader::Status::Malformed || fields.size() != header.size()) {
            ++st.malformed_rows;
            spdlog::debug("skipping malformed row at line {}", reader.line());
            continue;
        }
        Record r;
        for (const auto& [pos, attr] : mapping) field_of(r, attr) = trim(fields[pos]);
        if (textnorm::clean_light(r.name).empty()) {
            ++st.dropped_empty_name;
            continue;
        }
        if (!r.sic.empty() && !is_valid_sic(r.sic)) {
            ++st.invalid_sic;
            r.sic.clear();
        }
        r.id = static_cast<std::uint32_t>(records.size());
        refresh_caches(r);
        records.push_back(std::move(r));
    }
    st.records = records.size();
    return records;
}

// ---------------------------------------------------------------------------

EntityStore::EntityStore(std::vector<Record> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (records_[i].id != i) {
            throw Error(ErrorCode::IdOutOfRange, "record ids must be dense and in order");
        }
    }
}

const Record& EntityStore::get(std::uint32_t id) const {
    if (id >= records_.size()) {
        throw Error(ErrorCode::IdOutOfRange,
                    "record id " + std::to_string(id) + " out of range (" + std::to_string(records_.size()) + ")");
    }
    return records_[id];
}

std::string EntityStore::serialize() const {
    io::Writer arena;
    std::vector<std::uint64_t> offsets;
    offsets.reserve(records_.size());
    for (const auto& r : records_) {
        offsets.push_back(arena.size());
        for (const std::string* s : {&r.name, &r.short_name, &r.street, &r.city, &r.postal, &r.country,
                                     &r.sic, &r.clean_name.text, &r.clean_street.text, &r.clean_city.text}) {
            arena.str(*s);
        }
    }

    io::Writer body;
    for (std::uint64_t off : offsets) body.u64(off);
    body.bytes(arena.data());

    io::Writer out;
    out.bytes(kMagic);
    out.u32(kFormatVersion);
    out.u64(records_.size());
    out.u64(murmur3_64(body.data(), 0));
    out.bytes(body.data());
    return out.take();
}

EntityStore EntityStore::deserialize(std::string_view bytes) {
    if (bytes.size() < kHeaderSize) {
        throw Error(ErrorCode::ChecksumMismatch, "entity database truncated");
    }
    io::Reader header(bytes.substr(0, kHeaderSize));
    if (header.bytes(4) != kMagic) {
        throw Error(ErrorCode::VersionMismatch, "not an entity database");
    }
    if (const auto version = header.u32(); version != kFormatVersion) {
        throw Error(ErrorCode::VersionMismatch, "unsupported entity database version " + std::to_string(version));
    }
    const std::uint64_t count = header.u64();
    const std::uint64_t checksum = header.u64();
    const std::string_view body = bytes.substr(kHeaderSize);
    if (murmur3_64(std::as_bytes(std::span(body.data(), body.size())), 0) != checksum) {
        throw Error(ErrorCode::ChecksumMismatch, "entity database checksum mismatch");
    }

    io::Reader table(body);
    std::vector<std::uint64_t> offsets(count);
    for (auto& off : offsets) off = table.u64();
    const std::string_view arena = body.substr(table.pos());

    std::vector<Record> records;
    records.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        if (offsets[i] > arena.size()) throw Error(ErrorCode::ChecksumMismatch, "bad record offset");
        io::Reader rd(arena.substr(offsets[i]));
        Record r;
        r.id = static_cast<std::uint32_t>(i);
        for (std::string* s : {&r.name, &r.short_name, &r.street, &r.city, &r.postal, &r.country, &r.sic}) {
            *s = std::string(rd.str());
        }
        r.clean_name = textnorm::CleanText::from_clean(std::string(rd.str()));
        r.clean_street = textnorm::CleanText::from_clean(std::string(rd.str()));
        r.clean_city = textnorm::CleanText::from_clean(std::string(rd.str()));
        records.push_back(std::move(r));
    }
    return EntityStore(std::move(records));
}

void EntityStore::write(const std::filesystem::path& path) const {
    io::write_file_atomic(path.string(), serialize());
}

EntityStore EntityStore::load(const std::filesystem::path& path) {
    return deserialize(io::read_file(path.string()));
}

}  // namespace rlink::store
