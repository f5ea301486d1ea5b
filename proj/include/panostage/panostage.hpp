// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

// Umbrella header. The HTTP service lives separately in service.hpp.
#pragma once

#include "panostage/commands.hpp"
#include "panostage/dataset.hpp"
#include "panostage/image_io.hpp"
#include "panostage/layout.hpp"
#include "panostage/layout_io.hpp"
#include "panostage/photometry.hpp"
#include "panostage/projection.hpp"
#include "panostage/radiance.hpp"
#include "panostage/scene.hpp"
#include "panostage/scene_io.hpp"
