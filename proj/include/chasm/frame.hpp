#pragma once

#include <string>

namespace chasm {

// Identity of one video frame: which video, which shot within it, and when.
// A shot id is only meaningful together with its video id.
struct FrameRef {
    std::string video_id;
    std::string shot_id;
    double timestamp = 0.0;  // seconds

    bool operator==(const FrameRef&) const = default;
};

}  // namespace chasm
