#pragma once
namespace ocn {
inline int run_pipeline(int, char**) { return 2; }
}  // namespace ocn
