// expect: UNSUPPORTED_TYPE
float main(float x) {
    return x;
}
