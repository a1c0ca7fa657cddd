#include "kisgmm/common/log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace kisgmm::log {

namespace {

std::atomic<Level> g_level{Level::Warn};
std::mutex g_mutex;

Level initial_level() {
    const char* env = std::getenv("KISGMM_LOG");
    if (!env) return Level::Warn;
    switch (env[0]) {
        case 'd': return Level::Debug;
        case 'i': return Level::Info;
        case 'w': return Level::Warn;
        case 'e': return Level::Error;
        case 'o': return Level::Off;
        default: return Level::Warn;
    }
}

struct InitFromEnv {
    InitFromEnv() { g_level.store(initial_level()); }
} g_init;

void emit(const char* tag, const char* fmt, va_list args) {
    std::lock_guard<std::mutex> lock(g_mutex);
    std::fprintf(stderr, "[%s] ", tag);
    std::vfprintf(stderr, fmt, args);
    std::fputc('\n', stderr);
}

}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

#define KISGMM_LOG_IMPL(fn, lvl, tag)                 \
    void fn(const char* fmt, ...) {                   \
        if (level() > lvl) return;                    \
        va_list args;                                 \
        va_start(args, fmt);                          \
        emit(tag, fmt, args);                         \
        va_end(args);                                 \
    }

KISGMM_LOG_IMPL(debug, Level::Debug, "debug")
KISGMM_LOG_IMPL(info, Level::Info, "info")
KISGMM_LOG_IMPL(warn, Level::Warn, "warn")
KISGMM_LOG_IMPL(error, Level::Error, "error")

#undef KISGMM_LOG_IMPL

}  // namespace kisgmm::log
