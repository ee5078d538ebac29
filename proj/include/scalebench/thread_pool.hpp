#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "scalebench/errors.hpp"

namespace scalebench {

/// Fork-join pool with a fixed set of persistent workers.
///
/// run() executes one job on every worker and blocks until the last one
/// returns. Workers stay parked between regions, so repeated kernel
/// invocations reuse warm threads instead of paying thread creation cost
/// inside timed code.
class thread_pool {
public:
    explicit thread_pool(std::size_t workers) {
        if (workers == 0) {
            throw invalid_spec_error("thread_pool: worker count must be >= 1");
        }
        threads_.reserve(workers);
        for (std::size_t k = 0; k < workers; ++k) {
            threads_.emplace_back([this, k] { worker_loop(k); });
        }
    }

    ~thread_pool() {
        {
            std::lock_guard lock(mutex_);
            stop_ = true;
            ++generation_;
        }
        work_ready_.notify_all();
        for (auto& t : threads_) {
            t.join();
        }
    }

    thread_pool(const thread_pool&) = delete;
    thread_pool& operator=(const thread_pool&) = delete;

    std::size_t size() const noexcept { return threads_.size(); }

    /// Runs job(worker_index) on every worker, worker_index in [0, size()).
    /// Worker exceptions are collected and rethrown as one execution_error
    /// after the whole region has completed.
    void run(const std::function<void(std::size_t)>& job) {
        std::unique_lock lock(mutex_);
        job_ = &job;
        pending_ = threads_.size();
        errors_.clear();
        ++generation_;
        work_ready_.notify_all();
        region_done_.wait(lock, [this] { return pending_ == 0; });
        job_ = nullptr;
        if (!errors_.empty()) {
            std::string msg = "parallel region failed:";
            for (const auto& e : errors_) {
                msg += " [" + e + "]";
            }
            throw execution_error(msg);
        }
    }

private:
    void worker_loop(std::size_t index) {
        std::uint64_t seen = 0;
        for (;;) {
            const std::function<void(std::size_t)>* job = nullptr;
            {
                std::unique_lock lock(mutex_);
                work_ready_.wait(lock, [&] { return generation_ != seen; });
                seen = generation_;
                if (stop_) {
                    return;
                }
                job = job_;
            }
            std::string failure;
            try {
                (*job)(index);
            } catch (const std::exception& e) {
                failure = e.what();
            } catch (...) {
                failure = "unknown exception";
            }
            {
                std::lock_guard lock(mutex_);
                if (!failure.empty()) {
                    errors_.push_back(std::move(failure));
                }
                if (--pending_ == 0) {
                    region_done_.notify_all();
                }
            }
        }
    }

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable work_ready_;
    std::condition_variable region_done_;
    const std::function<void(std::size_t)>* job_ = nullptr;
    std::size_t pending_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
    std::vector<std::string> errors_;
};

} // namespace scalebench
