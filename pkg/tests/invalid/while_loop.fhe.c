// expect: UNBOUNDED_LOOP
u8 main(u8 a) {
    while (a > 3) {
        a = a - 3;
    }
    return a;
}
