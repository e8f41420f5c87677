#pragma once

#include <gtest/gtest.h>

#include "neodeform/error.hpp"

// Passes iff `stmt` throws neodeform::Error carrying `expected`.
#define EXPECT_ERROR_CODE(stmt, expected)                                            \
    do {                                                                            \
        try {                                                                       \
            stmt;                                                                   \
            ADD_FAILURE() << "no exception from " #stmt;                            \
        } catch (const ::neodeform::Error& e_) {                                    \
            EXPECT_EQ(e_.code(), expected) << e_.what();                            \
        }                                                                           \
    } while (0)
