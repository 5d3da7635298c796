#include "dyn/stack.hpp"

#include <pthread.h>

#include <exception>
#include <stdexcept>

namespace dyn {

namespace {

struct Job {
    const std::function<void()>* f;
    std::exception_ptr error;
};

void* trampoline(void* arg) {
    auto* job = static_cast<Job*>(arg);
    try {
        (*job->f)();
    } catch (...) {
        job->error = std::current_exception();
    }
    return nullptr;
}

}  // namespace

void with_stack(const std::function<void()>& f, size_t bytes) {
    pthread_attr_t attr;
    pthread_attr_init(&attr);
    Job job{&f, nullptr};
    pthread_t t;
    bool started = pthread_attr_setstacksize(&attr, bytes) == 0 && pthread_create(&t, &attr, trampoline, &job) == 0;
    pthread_attr_destroy(&attr);
    if (!started) {
        f();
        return;
    }
    pthread_join(t, nullptr);
    if (job.error) std::rethrow_exception(job.error);
}

}  // namespace dyn
