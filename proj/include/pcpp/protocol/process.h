/* Copyright 2026 The PCPP Simulator Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PCPP_PROTOCOL_PROCESS_H_
#define PCPP_PROTOCOL_PROCESS_H_

#include <coroutine>
#include <exception>
#include <utility>

namespace pcpp {

// What a suspended device program is waiting for.
enum class Yield {
  kProgress,  // did some work, may continue at once
  kBlocked,   // waiting on its pending communication batch
};

// A resumable device program. The scheduler resumes it one slice at a time;
// nested programs are driven with
//   for (auto sub = f(); sub.resume();) co_yield sub.last();
class Process {
 public:
  struct promise_type {
    Yield current = Yield::kProgress;
    std::exception_ptr error;

    Process get_return_object() {
      return Process(std::coroutine_handle<promise_type>::from_promise(*this));
    }
    std::suspend_always initial_suspend() noexcept { return {}; }
    std::suspend_always final_suspend() noexcept { return {}; }
    std::suspend_always yield_value(Yield y) noexcept {
      current = y;
      return {};
    }
    void return_void() noexcept {}
    void unhandled_exception() noexcept { error = std::current_exception(); }
  };

  Process() = default;
  Process(Process&& other) noexcept : handle_(std::exchange(other.handle_, {})) {}
  Process& operator=(Process&& other) noexcept {
    if (this != &other) {
      reset();
      handle_ = std::exchange(other.handle_, {});
    }
    return *this;
  }
  Process(const Process&) = delete;
  Process& operator=(const Process&) = delete;
  ~Process() { reset(); }

  // Runs to the next yield. Returns false once the program has finished and
  // rethrows anything it threw.
  bool resume() {
    if (!handle_ || handle_.done()) return false;
    handle_.resume();
    if (handle_.promise().error) std::rethrow_exception(std::exchange(handle_.promise().error, {}));
    return !handle_.done();
  }

  Yield last() const { return handle_.promise().current; }
  bool done() const { return !handle_ || handle_.done(); }

 private:
  explicit Process(std::coroutine_handle<promise_type> h) : handle_(h) {}
  void reset() {
    if (handle_) handle_.destroy();
    handle_ = {};
  }

  std::coroutine_handle<promise_type> handle_;
};

}  // namespace pcpp

#endif  // PCPP_PROTOCOL_PROCESS_H_
