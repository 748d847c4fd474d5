/* Copyright 2026 The JNR Authors. All Rights Reserved.

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

#ifndef JNR_PARALLEL_HPP_
#define JNR_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace jnr {

// JNR_THREADS if set to a positive integer, else hardware concurrency.
int worker_count();

// Calls fn(i) for every i in [0, n). Work items must write to disjoint
// outputs; results never depend on the number of workers. The first
// exception thrown by any item is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace jnr

#endif  // JNR_PARALLEL_HPP_
