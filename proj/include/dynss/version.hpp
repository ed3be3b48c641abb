#pragma once

namespace dynss {

// Recorded in every run.json; bump on any change to the emitted formats.
inline constexpr const char* kVersion = "v0.1.0";

} // namespace dynss
