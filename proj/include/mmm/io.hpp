// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "mmm/common.hpp"
#include "mmm/tensor.hpp"

namespace mmm::io {

// ---- tensor files (magic "MMT1") ----------------------------------------
// Layout: magic(4) | dtype u8 | ndim u8 | reserved u16=0 | ndim x u64 LE dims
// | row-major little-endian payload.

void write_tensor(const std::string& path, const Tensor& t);
Tensor read_tensor(const std::string& path);

std::vector<uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(const uint8_t* bytes, size_t len, size_t base_offset = 0);

// ---- model archives (magic "MMA1") ---------------------------------------
// Layout: magic(4) | u32 LE config length | config JSON bytes | u32 LE entry
// count | per entry: u16 LE name length | name | embedded tensor file bytes.
// Entries are written sorted by name so archives are byte-reproducible.

struct ModelArchive {
    std::string config;  // raw JSON text, round-tripped verbatim
    std::map<std::string, Tensor> entries;

    bool operator==(const ModelArchive&) const = default;
};

void write_model(const std::string& path, const ModelArchive& archive);
ModelArchive read_model(const std::string& path);

// ---- field rendering ------------------------------------------------------

enum class PgmScaling { Linear, Log1p };

// Binary PGM (P5, maxval 255). Linear: min->0, max->255; a constant field
// maps to 127. Log1p: values are first compressed as t = log1p(v / s) with
// s = median of the strictly positive values, then min-max mapped.
void export_pgm(const Grid2D<double>& field, const std::string& path, PgmScaling scaling);

// ---- CSV ("." decimal, "," separator, header row) -------------------------

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string format_double(double v);  // shortest round-trip decimal

// ---- small file helpers ---------------------------------------------------

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
// Write to a temp file in the same directory, then rename over the target.
void write_text_file_atomic(const std::string& path, const std::string& text);

}  // namespace mmm::io
