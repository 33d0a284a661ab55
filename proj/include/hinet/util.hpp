// Small utilities shared by the experiment harness: content hashing,
// CSV reading, and whole-file text IO.
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hinet {

// SHA-1 digest of `data` as 40 lowercase hex characters. Used to fingerprint
// run configurations; not used for anything security sensitive.
std::string sha1_hex(std::string_view data);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by header name; throws DataError if absent.
    int column(const std::string& name) const;
};

// Parses a comma-separated file with a mandatory header row. Fields are not
// quoted (none of the files this project writes need quoting).
CsvTable read_csv(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace hinet
