#ifndef RAIE_TESTS_SUPPORT_HPP
#define RAIE_TESTS_SUPPORT_HPP

#include <raie/error.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>

#define EXPECT_RAIE_ERROR(stmt, expected)                                                   \
    do {                                                                                    \
        try {                                                                               \
            stmt;                                                                           \
            ADD_FAILURE() << "expected " << ::raie::to_string(expected) << ", nothing thrown"; \
        } catch (const ::raie::Error& e_) {                                                 \
            EXPECT_EQ(e_.code(), expected) << e_.what();                                    \
        }                                                                                   \
    } while (0)

namespace support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("raie_test_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace support

#endif  // RAIE_TESTS_SUPPORT_HPP
