// Copyright (C) 2026 The sinkprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace sinkprune {

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace sinkprune
