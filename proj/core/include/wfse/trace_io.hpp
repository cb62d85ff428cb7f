#ifndef WFSE_TRACE_IO_HPP
#define WFSE_TRACE_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "wfse/trace.hpp"

// Trace file format (one trace per file): UTF-8 text, one packet per line,
//   <time_seconds> <dir> [<is_dummy>]
// dir is +1, 1 or -1; the optional third column (0/1) marks defense-injected
// packets and is written for defended datasets. '#' starts a comment line.
// Directory layout: <root>/<class_label>/<trace_id>.txt. An optional
// manifest.json may pin class names and file paths explicitly.

namespace wfse {

/// Parses one trace from text. Events keep file order (no sorting); labels
/// are assigned by the caller. Throws DataError naming the 1-based line
/// number on malformed records, or for an empty (no-packet) stream.
Trace parse_trace(std::istream& in, const std::string& origin = "<stream>");
Trace parse_trace_text(const std::string& text, const std::string& origin = "<string>");

Trace load_trace_file(const std::filesystem::path& path);

/// Writes the standard format; emits the is_dummy column when
/// `with_dummy_column` is set (defended datasets are always written with it).
void save_trace_file(const std::filesystem::path& path, const Trace& trace,
                     bool with_dummy_column);

/// Loads <root>/<class>/<id>.txt, sanitizing every trace. Class directories
/// are mapped to labels in lexicographic order; files read in name order so
/// loading is deterministic. Rejected traces are dropped and counted.
/// When <root>/manifest.json exists it takes precedence: it must contain
/// {"classes": [{"name": ..., "files": [...]}]} with paths relative to root.
TraceDataset load_dataset(const std::filesystem::path& root);

/// Writes a dataset in the directory layout (always with the is_dummy
/// column) plus a manifest.json. Trace ids are zero-padded row indexes.
void save_dataset(const std::filesystem::path& root, const TraceDataset& dataset);

} // namespace wfse

#endif
