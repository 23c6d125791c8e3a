// expect: VARIABLE_LOOP_BOUND
u8 main(u8 n) {
    u8 acc = 0;
    for (int i = 0; i < n; i++) {
        acc += 1;
    }
    return acc;
}
